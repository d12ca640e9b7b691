//! Acceptance run: one `PASS`/`FAIL` line per criterion.
//!
//! Criteria listed in [`UNATTAINABLE`] are expected to print `FAIL`; for
//! those the run instead asserts the concrete mathematical fact that makes
//! them unattainable, so they cannot silently regress into a different
//! failure. Any other `FAIL` makes the target exit non-zero.

mod common;

use std::collections::BTreeMap;
use std::process::{Command, ExitCode};
use std::time::Instant;

use common::{cand, concave_pl_generator, default_cfg, halton_off_singular, linspace, peaked_generator};
use metricline::autodiff::{cross_partial, Status};
use metricline::catalog::{self, get_with, CatalogEntry};
use metricline::certify::{certify, estimate_limit, CheckConfig, H4Kind, LimitDirection, Theorem, Verdict};
use metricline::necessary::{self, battery_points, check_first_order_bound};
use metricline::search::{brute_force_oracle, triangle_margin, ORACLE_TOL};
use metricline::subadditive::{breakpoint_grid, check_subadditive, classify_translation_invariant, even_extension, GeneratorFunction};

/// Relative agreement between exact derivatives and printed closed forms.
const CROSS_PARTIAL_REL_TOL: f64 = 1e-8;
/// Number of sample points for the closed-form comparison.
const CROSS_PARTIAL_POINTS: usize = 10_000;
/// Relative accuracy required of the limit estimates.
const LIMIT_REL_TOL: f64 = 1e-6;
/// Largest magnitude at which limits are probed.
const LIMIT_MAGNITUDE: f64 = 1e6;
/// Smallest acceptable triangle gap for the first fixture: 1 − 2/3, minus slack.
const FIXTURE_GAP_MIN: f64 = 1.0 / 3.0 - 1e-9;
/// Margin of the square of the difference on {0, 1/2, 1}.
const SQUARE_MARGIN: f64 = -0.5;
/// Subadditivity scan step for the fixtures.
const FIXTURE_STEP: f64 = 1.0 / 300.0;
/// Scan step for the random generators (breakpoints are multiples of 1/12).
const SWEEP_STEP: f64 = 1.0 / 60.0;
/// Random generators per family in the soundness sweep.
const SWEEP_SEEDS: u64 = 100;
/// Points of the brute-force oracle grid in the sweep.
const SWEEP_ORACLE_POINTS: usize = 60;
/// Wall-clock budget for the catalog certification.
const CATALOG_BUDGET_S: f64 = 60.0;

/// Criteria that cannot pass, with the reason printed next to `FAIL`.
const UNATTAINABLE: [(u8, &str); 2] = [
    (1, "p_relative with p = 2, 3 has a negative cross partial where x*y < 0, so no sufficiency theorem applies"),
    (2, "the printed p_relative cross partial differs from the true one outside the positive quadrant"),
];

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

fn theorem_of(v: &Verdict) -> String {
    v.theorem().map_or_else(|| v.kind().to_string(), |t| t.to_string())
}

fn rel_err(got: f64, want: f64) -> f64 {
    if got == want {
        0.0
    } else {
        (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
    }
}

/// A printed closed form at one point: its value and the sum of the
/// magnitudes of its terms. When the terms cancel exactly the value is 0 and
/// the error is measured against that scale instead.
#[derive(Clone, Copy)]
struct Printed {
    value: f64,
    scale: f64,
}

impl Printed {
    fn error_of(self, got: f64) -> f64 {
        if self.value == 0.0 {
            got.abs() / self.scale
        } else {
            rel_err(got, self.value)
        }
    }
}

fn sgn(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `2|x − y| / ((1 + x²)^{3/2} (1 + y²)^{3/2})`, as printed.
fn printed_chordal(x: f64, y: f64) -> Printed {
    let value = 2.0 * (x - y).abs() / ((1.0 + x * x).powf(1.5) * (1.0 + y * y).powf(1.5));
    Printed { value, scale: value }
}

/// The printed p-relative cross partial for the ordered pair `x > y`.
fn printed_p_relative(p: f64, x: f64, y: f64) -> Printed {
    let (x, y) = if x > y { (x, y) } else { (y, x) };
    let s = (x.abs().powf(p) + y.abs().powf(p)).powf(2.0 + 1.0 / p);
    let a = sgn(x) * x.abs().powf(2.0 * p - 1.0) / s;
    let b = sgn(y) * y.abs().powf(2.0 * p - 1.0) / s;
    let c = p * sgn(x * y) * (x.abs() - y.abs()) / s * (x * y).abs().powf(p - 1.0);
    Printed {
        value: a - b + c,
        scale: a.abs() + b.abs() + c.abs(),
    }
}

/// The printed generalized chordal (α = β = 1) cross partial, written for
/// `x < y`; the cross partial of a symmetric function is symmetric.
fn printed_generalized_chordal(p: f64, x: f64, y: f64) -> Printed {
    let (x, y) = if x < y { (x, y) } else { (y, x) };
    let e = (p + 1.0) / p;
    let den = (1.0 + x.abs().powf(p)).powf(e) * (1.0 + y.abs().powf(p)).powf(e);
    let a = sgn(y) * y.abs().powf(p - 1.0) / den;
    let b = sgn(x) * x.abs().powf(p - 1.0) / den;
    Printed {
        value: a - b,
        scale: a.abs() + b.abs(),
    }
}

/// Exact cross partial of the candidate at every point, with relative
/// errors against `oracle`: (worst error, its point, points above tolerance).
fn compare(entry: &CatalogEntry, pts: &[(f64, f64)], oracle: impl Fn(f64, f64) -> Printed) -> (f64, (f64, f64), Vec<(f64, f64)>) {
    let mut worst = (0.0, (0.0, 0.0));
    let mut bad = Vec::new();
    for &(x, y) in pts {
        let ad = cross_partial(&entry.candidate.expr, (x, y)).expect("evaluates off the singular set");
        assert_eq!(ad.status, Status::ExactAd, "{} at ({x}, {y})", entry.name);
        let err = oracle(x, y).error_of(ad.value);
        if err > worst.0 {
            worst = (err, (x, y));
        }
        if err > CROSS_PARTIAL_REL_TOL {
            bad.push((x, y));
        }
    }
    (worst.0, worst.1, bad)
}

fn criterion_1(cfg: &CheckConfig) -> Outcome {
    let start = Instant::now();
    let none = BTreeMap::new();
    let mut lines = Vec::new();
    let mut ok = true;
    let mut expect = |label: &str, v: &Verdict, good: bool| {
        ok &= good;
        lines.push(format!("{label} -> {}", theorem_of(v)));
    };

    let v = certify(&get_with("chordal", &[]).unwrap().candidate, cfg);
    expect("chordal", &v, v.theorem() == Some(Theorem::Plain(H4Kind::D)));

    for p in [1.0, 2.0, 3.0] {
        let v = certify(&get_with("p_relative", &[("p", p)]).unwrap().candidate, cfg);
        let combined = matches!(v.theorem(), Some(Theorem::Combined { .. }));
        expect(&format!("p_relative p={p}"), &v, combined);
    }

    let gc = get_with("generalized_chordal", &[("alpha", 1.0), ("beta", 1.0), ("p", 3.0)]).unwrap();
    let v = certify(&gc.candidate, cfg);
    expect("generalized_chordal p=3", &v, v.is_certified());

    for g in ["sqrt(x)", "x/(1+x)"] {
        let entry = catalog::get("concave_ti", &none, Some(g)).unwrap();
        let v = certify(&entry.candidate, cfg);
        expect(&format!("concave_ti {g}"), &v, v.theorem() == Some(Theorem::Plain(H4Kind::A)));
    }

    let secs = start.elapsed().as_secs_f64();
    ok &= secs < CATALOG_BUDGET_S;
    lines.push(format!("{secs:.1} s"));
    Outcome::new(ok, lines.join("; "))
}

/// The fact behind the unattainable part of criterion 1.
fn criterion_1_reason(cfg: &CheckConfig) {
    for p in [2.0, 3.0] {
        let entry = get_with("p_relative", &[("p", p)]).unwrap();
        let v = certify(&entry.candidate, cfg);
        assert!(matches!(v, Verdict::Inconclusive { .. }), "p = {p}: {v:?}");
        let at = cross_partial(&entry.candidate.expr, (1.0, -0.5)).unwrap();
        assert_eq!(at.status, Status::ExactAd);
        assert!(at.value < -0.07, "p = {p}: {at:?}");
    }
}

fn criterion_2() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;

    let chordal = get_with("chordal", &[]).unwrap();
    let pts = halton_off_singular(&chordal, CROSS_PARTIAL_POINTS);
    let (worst, at, bad) = compare(&chordal, &pts, printed_chordal);
    ok &= bad.is_empty();
    lines.push(format!("chordal worst {worst:.1e} at {at:?}"));

    for p in [1.0, 2.0, 3.0] {
        let gc = get_with("generalized_chordal", &[("alpha", 1.0), ("beta", 1.0), ("p", p)]).unwrap();
        let pts = halton_off_singular(&gc, CROSS_PARTIAL_POINTS);
        let (worst, _, bad) = compare(&gc, &pts, |x, y| printed_generalized_chordal(p, x, y));
        ok &= bad.is_empty();
        lines.push(format!("generalized_chordal p={p} worst {worst:.1e}"));
    }

    for p in [1.0, 2.0, 3.0] {
        let pr = get_with("p_relative", &[("p", p)]).unwrap();
        let pts = halton_off_singular(&pr, CROSS_PARTIAL_POINTS);
        let (_, _, bad) = compare(&pr, &pts, |x, y| printed_p_relative(p, x, y));
        ok &= bad.is_empty();
        lines.push(format!("p_relative p={p}: {} of {} points disagree", bad.len(), pts.len()));
    }
    Outcome::new(ok, lines.join("; "))
}

/// The fact behind criterion 2: every disagreement lies outside the positive
/// quadrant, where the printed form is not the cross partial.
fn criterion_2_reason() {
    for p in [1.0, 2.0, 3.0] {
        let pr = get_with("p_relative", &[("p", p)]).unwrap();
        let pts = halton_off_singular(&pr, CROSS_PARTIAL_POINTS);
        let (_, _, bad) = compare(&pr, &pts, |x, y| printed_p_relative(p, x, y));
        assert!(!bad.is_empty(), "p = {p}");
        assert!(bad.iter().all(|&(x, y)| x < 0.0 || y < 0.0), "p = {p}");
        let positive: Vec<_> = pts.iter().copied().filter(|&(x, y)| x > 0.0 && y > 0.0).collect();
        let (worst, at, _) = compare(&pr, &positive, |x, y| printed_p_relative(p, x, y));
        assert!(worst <= CROSS_PARTIAL_REL_TOL, "p = {p}: {worst:e} at {at:?}");
    }
}

fn criterion_3(cfg: &CheckConfig) -> Outcome {
    let mags: Vec<f64> = cfg.limit_magnitudes.iter().copied().filter(|&m| m <= LIMIT_MAGNITUDE).collect();
    assert_eq!(mags.last(), Some(&LIMIT_MAGNITUDE));
    let chordal = get_with("chordal", &[]).unwrap();
    let mut cases: Vec<(String, CatalogEntry, f64, f64)> = Vec::new();
    for c in [0.0f64, 1.0, 5.0] {
        cases.push((format!("chordal c={c}"), chordal.clone(), c, 2.0 / (1.0 + c * c).sqrt()));
        for p in [1.0, 2.0, 3.0] {
            let e = get_with("p_relative", &[("p", p)]).unwrap();
            cases.push((format!("p_relative p={p} c={c}"), e, c, 1.0));
        }
    }
    let mut worst: (f64, String) = (0.0, String::new());
    let mut ok = true;
    for (label, entry, c, want) in &cases {
        for dir in [LimitDirection::PlusInfinity, LimitDirection::MinusInfinity] {
            let est = estimate_limit(|l| entry.candidate.eval(*c, l), dir, &mags, cfg.tol_limit).unwrap();
            let err = rel_err(est.value, *want);
            ok &= est.is_converged() && err <= LIMIT_REL_TOL;
            if err >= worst.0 {
                worst = (err, format!("{label} {dir:?}"));
            }
        }
    }
    Outcome::new(ok, format!("{} limits, worst relative error {:.1e} ({})", cases.len() * 2, worst.0, worst.1))
}

fn criterion_4(cfg: &CheckConfig) -> Outcome {
    let exa1 = GeneratorFunction::fixture("exa1").unwrap();
    let v = classify_translation_invariant(&exa1, cfg).unwrap();
    let (fixture_ok, fixture_detail) = match &v {
        Verdict::Refuted { violation, .. } => {
            let again = violation.reevaluate(&exa1.induced_metric()).unwrap();
            (
                violation.magnitude >= FIXTURE_GAP_MIN && (again - violation.magnitude).abs() <= 1e-12,
                format!("exa1 refuted, magnitude {:.12}", violation.magnitude),
            )
        }
        other => (false, format!("exa1 -> {}", other.kind())),
    };

    let square = cand("(x-y)^2");
    let oracle = brute_force_oracle(&square, &[0.0, 0.5, 1.0], ORACLE_TOL).unwrap();
    let margin = triangle_margin(&square, (0.0, 0.5, 1.0)).unwrap().m_min;
    let oracle_ok = margin == SQUARE_MARGIN && oracle.iter().any(|w| w.witness == [0.0, 0.5, 1.0]);

    let (fo, _) = check_first_order_bound(&square.expr, &battery_points(cfg), cfg.tol_nec);
    let battery_ok = !fo.is_empty() && fo.iter().all(|w| w.bound.abs() < 1e-9);
    let refuted = certify(&square, cfg).is_refuted();

    Outcome::new(
        fixture_ok && oracle_ok && battery_ok && refuted,
        format!(
            "{fixture_detail}; (x-y)^2 margin {margin} on {{0, 0.5, 1}}, {} first-order witnesses with bound 0, verdict {}",
            fo.len(),
            if refuted { "refuted" } else { "not refuted" }
        ),
    )
}

fn criterion_5() -> Outcome {
    let exa2 = GeneratorFunction::fixture("exa2").unwrap();
    let grid2 = breakpoint_grid(&exa2, -5.0, 5.0, FIXTURE_STEP);
    let v2 = check_subadditive(&exa2, &grid2).unwrap();
    let exa1 = GeneratorFunction::fixture("exa1").unwrap();
    let grid1 = breakpoint_grid(&exa1, -5.0, 5.0, FIXTURE_STEP);
    let v1 = check_subadditive(&exa1, &grid1).unwrap();
    let found = v1.iter().find(|p| (p.x, p.y) == (3.0, -2.0) || (p.x, p.y) == (-2.0, 3.0));
    let exact = found.is_some_and(|p| p.lhs == 1.0 && (p.rhs - 2.0 / 3.0).abs() <= f64::EPSILON);
    Outcome::new(
        v2.is_empty() && exact,
        format!(
            "exa2: {} violations on {} points; exa1: pair (3, -2) {}",
            v2.len(),
            grid2.len(),
            if exact { "found" } else { "missing" }
        ),
    )
}

fn criterion_6(cfg: &CheckConfig) -> Outcome {
    let certified = common::certified_catalog();
    let dirty: Vec<String> = certified
        .iter()
        .filter(|d| necessary::run(d, cfg).is_refuted())
        .map(|d| d.label.clone())
        .collect();
    let injected = ["abs(y-x)*(1 + 0.5*sgn(y-x))", "(x-y)^2", "abs(x-y) + 2*(x-y)^2"];
    let missed: Vec<&str> = injected
        .iter()
        .copied()
        .filter(|src| !necessary::run(&cand(src), cfg).is_refuted())
        .collect();
    Outcome::new(
        dirty.is_empty() && missed.is_empty(),
        format!(
            "{} certified entries, witnesses on {dirty:?}; {} injected non-metrics, missed {missed:?}",
            certified.len(),
            injected.len()
        ),
    )
}

fn criterion_7(cfg: &CheckConfig) -> Outcome {
    let mut cfg = cfg.clone();
    cfg.subadditive_step = SWEEP_STEP;
    let grid = linspace(-4.0, 4.0, SWEEP_ORACLE_POINTS);
    let mut certified = 0;
    let mut oracle_clean = 0;
    for seed in 0..SWEEP_SEEDS {
        let g = concave_pl_generator(seed);
        if classify_translation_invariant(&g, &cfg).unwrap().is_certified() {
            certified += 1;
        }
        if brute_force_oracle(&g.induced_metric(), &grid, ORACLE_TOL).unwrap().is_empty() {
            oracle_clean += 1;
        }
    }
    let mut genuine = 0;
    for seed in 0..SWEEP_SEEDS {
        let f = even_extension(&peaked_generator(seed));
        let pairs = check_subadditive(&f, &breakpoint_grid(&f, -5.0, 5.0, SWEEP_STEP)).unwrap();
        let d = f.induced_metric();
        let real = pairs.first().is_some_and(|p| {
            let [a, b, c] = p.mapped_triple();
            triangle_margin(&d, (a, b, c)).is_ok_and(|m| m.m_min < 0.0)
        });
        if real {
            genuine += 1;
        }
    }
    let n = SWEEP_SEEDS as usize;
    Outcome::new(
        certified == n && oracle_clean == n && genuine == n,
        format!("concave: {certified}/{n} certified, {oracle_clean}/{n} oracle-clean; peaked: {genuine}/{n} genuine violations"),
    )
}

fn run_report(args: &[&str]) -> String {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let status = Command::new(env!("CARGO_BIN_EXE_metricline"))
        .args(args)
        .args(["--seed", "42", "--omit-timings", "--json"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(status.status.code().is_some());
    std::fs::read_to_string(path).unwrap()
}

fn criterion_8() -> Outcome {
    let runs: [&[&str]; 4] = [
        &["certify", "--catalog", "chordal"],
        &["certify", "--expr", "(x-y)^2"],
        &["certify", "--expr", "sqrt(abs(y-x)) + 0.3*(x-y)^2"],
        &["subadditive", "--fixture", "exa1"],
    ];
    let differing: Vec<String> = runs
        .iter()
        .filter(|args| run_report(args) != run_report(args))
        .map(|args| args.join(" "))
        .collect();
    Outcome::new(
        differing.is_empty(),
        format!("{} commands run twice, differing: {differing:?}", runs.len()),
    )
}

fn main() -> ExitCode {
    let cfg = default_cfg();
    let results: Vec<(u8, Outcome)> = vec![
        (1, criterion_1(&cfg)),
        (2, criterion_2()),
        (3, criterion_3(&cfg)),
        (4, criterion_4(&cfg)),
        (5, criterion_5()),
        (6, criterion_6(&cfg)),
        (7, criterion_7(&cfg)),
        (8, criterion_8()),
    ];
    let mut unexpected = Vec::new();
    for (n, out) in &results {
        let known = UNATTAINABLE.iter().find(|(k, _)| k == n).map(|(_, why)| *why);
        let tag = if out.pass { "PASS" } else { "FAIL" };
        match (out.pass, known) {
            (false, Some(why)) => println!("criterion {n}: {tag} (unattainable: {why}) -- {}", out.detail),
            _ => println!("criterion {n}: {tag} -- {}", out.detail),
        }
        match (out.pass, known) {
            (false, None) => unexpected.push(format!("criterion {n} failed")),
            (true, Some(_)) => unexpected.push(format!("criterion {n} passed but is listed as unattainable")),
            _ => {}
        }
    }
    criterion_1_reason(&cfg);
    criterion_2_reason();
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("{}", unexpected.join("\n"));
        ExitCode::FAILURE
    }
}
