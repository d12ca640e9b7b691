//! Translation-invariant candidates `d(x, y) = f(y − x)`.
//!
//! Such a `d` is a metric exactly when `f` is even, vanishes only at 0 and
//! is subadditive. A non-decreasing subadditive half-line generator `g` with
//! `g(0) = 0` always qualifies through its even extension.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::certify::{Certificate, CheckConfig, Evidence, MetricCandidate, Theorem, Verdict};
use crate::expr::{eval_x, parse_x, BinOp, EvalError, Expr, ParseError, UnaryFn, Var};
use crate::grid;
use crate::search::{triangle_margin, Violation, ViolationKind};

/// Even piecewise generator that is not subadditive: `f(3 − 2) = 1` while
/// `f(3) + f(−2) = 2/3`.
pub const FIXTURE_EXA1: &str = "pw(abs(x) < 1, abs(x), abs(x) < 5/3, 2 - abs(x), 1/3)";
/// Same shape as [`FIXTURE_EXA1`] with a shorter descent and a higher
/// plateau, which makes it subadditive although not monotone on `[0, ∞)`.
pub const FIXTURE_EXA2: &str = "pw(abs(x) < 1, abs(x), abs(x) < 4/3, 2 - abs(x), 2/3)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    WholeLine,
    HalfLine,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SubadditiveError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("generator must vanish at 0, got {0}")]
    NonZeroAtOrigin(f64),
    #[error("unknown fixture `{0}` (expected exa1 or exa2)")]
    UnknownFixture(String),
}

/// A one-variable generator `f` (whole line) or `g` (half line).
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorFunction {
    pub expr: Expr,
    pub domain: Domain,
    pub source: String,
}

impl GeneratorFunction {
    pub fn new(expr: Expr, domain: Domain, source: impl Into<String>) -> Result<Self, SubadditiveError> {
        let at0 = eval_x(&expr, 0.0)?;
        if at0 != 0.0 {
            return Err(SubadditiveError::NonZeroAtOrigin(at0));
        }
        Ok(GeneratorFunction {
            expr,
            domain,
            source: source.into(),
        })
    }

    pub fn parse(source: &str, domain: Domain) -> Result<Self, SubadditiveError> {
        GeneratorFunction::new(parse_x(source)?, domain, source)
    }

    pub fn fixture(name: &str) -> Result<Self, SubadditiveError> {
        match name {
            "exa1" => GeneratorFunction::parse(FIXTURE_EXA1, Domain::WholeLine),
            "exa2" => GeneratorFunction::parse(FIXTURE_EXA2, Domain::WholeLine),
            other => Err(SubadditiveError::UnknownFixture(other.to_string())),
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        eval_x(&self.expr, t)
    }

    /// The translation-invariant candidate `d(x, y) = f(y − x)`.
    pub fn induced_metric(&self) -> MetricCandidate {
        let whole = match self.domain {
            Domain::WholeLine => self.clone(),
            Domain::HalfLine => even_extension(self),
        };
        let diff = Expr::binary(BinOp::Sub, Expr::Var(Var::Y), Expr::Var(Var::X));
        let d = whole.expr.substitute(Var::X, &diff);
        MetricCandidate::new(format!("f(y-x), f = {}", whole.source), d.to_string(), d)
    }
}

/// `f(x) = g(|x|)`.
pub fn even_extension(g: &GeneratorFunction) -> GeneratorFunction {
    let abs_x = Expr::unary(UnaryFn::Abs, Expr::Var(Var::X));
    let expr = g.expr.substitute(Var::X, &abs_x);
    GeneratorFunction {
        source: expr.to_string(),
        expr,
        domain: Domain::WholeLine,
    }
}

/// A pair breaking `f(x + y) ≤ f(x) + f(y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairViolation {
    pub x: f64,
    pub y: f64,
    /// `f(x + y)`
    pub lhs: f64,
    /// `f(x) + f(y)`
    pub rhs: f64,
    pub gap: f64,
}

impl PairViolation {
    /// The points `{0, y, x + y}`, sorted and shifted to start at 0.
    ///
    /// For `d(a, b) = f(b − a)` they satisfy `d(y, x+y) = f(x)`,
    /// `d(0, y) = f(y)` and `d(0, x+y) = f(x+y)`, so the pair violation
    /// becomes a triangle violation.
    pub fn mapped_triple(&self) -> [f64; 3] {
        let mut t = [0.0, self.y, self.x + self.y];
        t.sort_by(f64::total_cmp);
        let base = t[0];
        [0.0, t[1] - base, t[2] - base]
    }
}

/// Relative tolerance for a reported pair violation.
pub const PAIR_TOL: f64 = 1e-12;

/// Smallest `q ≤ 360` with `q·v` (nearly) an integer, or 1000.
fn denominator(v: f64) -> u32 {
    (1..=360u32)
        .find(|&q| {
            let s = q as f64 * v;
            (s - s.round()).abs() <= 1e-9 * (q as f64) * v.abs().max(1.0)
        })
        .unwrap_or(1000)
}

fn severity_key(v: &PairViolation) -> (i64, u32, f64, f64) {
    (
        (v.gap * 1e9).round() as i64,
        denominator(v.x).max(denominator(v.y)),
        v.x.abs() + v.y.abs(),
        v.x,
    )
}

/// Exhaustive scan of `grid × grid` for pairs with `x + y` inside the grid's range.
///
/// Violations need `gap > 1e-12·(1 + |rhs|)`. They are sorted by decreasing
/// gap (to 1e-9), then by the simplest rational witness, then by `|x| + |y|`,
/// then by decreasing `x`.
pub fn check_subadditive(f: &GeneratorFunction, grid: &[f64]) -> Result<Vec<PairViolation>, EvalError> {
    let pts = grid::sorted_unique(grid.to_vec());
    let (Some(&lo), Some(&hi)) = (pts.first(), pts.last()) else {
        return Ok(Vec::new());
    };
    let vals: Vec<f64> = pts.iter().map(|&t| f.eval(t)).collect::<Result<_, _>>()?;
    let found: Vec<Vec<PairViolation>> = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::new();
            for j in 0..pts.len() {
                let s = pts[i] + pts[j];
                if s < lo || s > hi {
                    continue;
                }
                let lhs = f.eval(s)?;
                let rhs = vals[i] + vals[j];
                let gap = lhs - rhs;
                if gap > PAIR_TOL * (1.0 + rhs.abs()) {
                    out.push(PairViolation {
                        x: pts[i],
                        y: pts[j],
                        lhs,
                        rhs,
                        gap,
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<_, EvalError>>()?;
    let mut keyed: Vec<_> = found
        .into_iter()
        .flatten()
        .map(|v| (severity_key(&v), v))
        .collect();
    keyed.sort_by(|(a, _), (b, _)| {
        b.0.cmp(&a.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.total_cmp(&b.2))
            .then(b.3.total_cmp(&a.3))
    });
    Ok(keyed.into_iter().map(|(_, v)| v).collect())
}

/// First maximal strictly descending run `(a, b)` with `g(a) > g(b)`, if any.
pub fn check_nondecreasing(g: &GeneratorFunction, grid: &[f64]) -> Result<Option<(f64, f64)>, EvalError> {
    let pts = grid::sorted_unique(grid.to_vec());
    let vals: Vec<f64> = pts.iter().map(|&t| g.eval(t)).collect::<Result<_, _>>()?;
    let tol = |v: f64| PAIR_TOL * (1.0 + v.abs());
    for i in 0..pts.len().saturating_sub(1) {
        if vals[i] > vals[i + 1] + tol(vals[i]) {
            let mut j = i + 1;
            while j + 1 < pts.len() && vals[j + 1] < vals[j] - tol(vals[j]) {
                j += 1;
            }
            return Ok(Some((pts[i], pts[j])));
        }
    }
    Ok(None)
}

/// Switching-point discriminants of every kink node in `e`.
fn discriminants(e: &Expr) -> Vec<Expr> {
    let mut out = Vec::new();
    e.visit(&mut |n| match n {
        Expr::Unary(UnaryFn::Abs | UnaryFn::Sgn, a) => out.push((**a).clone()),
        Expr::Binary(BinOp::Min | BinOp::Max, a, b) => {
            out.push(Expr::binary(BinOp::Sub, (**a).clone(), (**b).clone()))
        }
        Expr::Piecewise { branches, .. } => {
            for (c, _) in branches {
                out.push(Expr::binary(BinOp::Sub, c.lhs.clone(), c.rhs.clone()));
            }
        }
        _ => {}
    });
    out
}

fn snap(v: f64) -> f64 {
    for q in 1..=12u32 {
        let s = v * q as f64;
        if (s - s.round()).abs() <= 1e-10 * q as f64 {
            return s.round() / q as f64;
        }
    }
    v
}

/// Breakpoints of `f` in `[lo, hi]`: zeros of kink discriminants, located by
/// sign changes on `coarse` and bisection.
pub fn breakpoints(f: &GeneratorFunction, coarse: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for disc in discriminants(&f.expr) {
        let vals: Vec<Option<f64>> = coarse.iter().map(|&t| eval_x(&disc, t).ok()).collect();
        for i in 0..coarse.len() {
            let Some(v) = vals[i] else { continue };
            if v == 0.0 {
                out.push(coarse[i]);
                continue;
            }
            if let Some(Some(w)) = vals.get(i + 1) {
                if v.signum() != w.signum() && *w != 0.0 {
                    let (mut a, mut b) = (coarse[i], coarse[i + 1]);
                    for _ in 0..200 {
                        let m = 0.5 * (a + b);
                        if m == a || m == b {
                            break;
                        }
                        match eval_x(&disc, m) {
                            Ok(mv) if mv == 0.0 => {
                                a = m;
                                b = m;
                                break;
                            }
                            Ok(mv) if mv.signum() == v.signum() => a = m,
                            Ok(_) => b = m,
                            Err(_) => break,
                        }
                    }
                    out.push(snap(0.5 * (a + b)));
                }
            }
        }
    }
    grid::sorted_unique(out)
}

/// Uniform grid on `[lo, hi]` with `step`, closed under breakpoints, their
/// negatives, and pairwise sums and differences that stay in range.
pub fn breakpoint_grid(f: &GeneratorFunction, lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let mut pts = grid::uniform(lo, hi, step);
    let bps = breakpoints(f, &pts);
    let mut extra: Vec<f64> = Vec::new();
    let mut base: Vec<f64> = bps.iter().flat_map(|b| [*b, -*b]).collect();
    base = grid::sorted_unique(base);
    for &a in &base {
        extra.push(a);
        for &b in &base {
            extra.push(a + b);
            extra.push(a - b);
        }
    }
    pts.extend(extra.into_iter().filter(|v| *v >= lo && *v <= hi));
    grid::sorted_unique(pts)
}

/// How a translation-invariant candidate was certified.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TiEvidence {
    pub generator: String,
    pub grid_points: usize,
    pub half_width: f64,
    pub step: f64,
}

/// Decide `d(x, y) = f(y − x)` for the generator.
///
/// Whole-line generators are first checked for evenness. Positivity off 0 is
/// required. A non-decreasing subadditive restriction to `[0, ∞)` certifies
/// directly; otherwise the even extension is scanned pairwise, and its first
/// violation is mapped to a triangle violation of the induced metric.
pub fn classify_translation_invariant(gen: &GeneratorFunction, cfg: &CheckConfig) -> Result<Verdict, EvalError> {
    let w = cfg.subadditive_half_width;
    let (half, whole) = match gen.domain {
        Domain::HalfLine => (gen.clone(), even_extension(gen)),
        Domain::WholeLine => (gen.clone(), gen.clone()),
    };
    let full_grid = breakpoint_grid(&whole, -w, w, cfg.subadditive_step);
    let half_grid: Vec<f64> = full_grid.iter().copied().filter(|t| *t >= 0.0).collect();

    if gen.domain == Domain::WholeLine {
        for &t in &half_grid {
            let (a, b) = (whole.eval(t)?, whole.eval(-t)?);
            if (a - b).abs() > PAIR_TOL * (1.0 + a.abs()) {
                return Ok(Verdict::Refuted {
                    violation: Violation {
                        kind: ViolationKind::Symmetry,
                        witness: vec![0.0, t],
                        magnitude: (a - b).abs(),
                    },
                    pair: None,
                });
            }
        }
    }
    for &t in half_grid.iter().filter(|t| **t > 0.0) {
        let v = half.eval(t)?;
        if v <= 0.0 {
            return Ok(Verdict::Refuted {
                violation: Violation {
                    kind: ViolationKind::Positivity,
                    witness: vec![0.0, t],
                    magnitude: -v,
                },
                pair: None,
            });
        }
    }

    let evidence = |grid_points| TiEvidence {
        generator: gen.source.clone(),
        grid_points,
        half_width: w,
        step: cfg.subadditive_step,
    };
    if check_nondecreasing(&half, &half_grid)?.is_none() && check_subadditive(&half, &half_grid)?.is_empty() {
        return Ok(Verdict::Certified(Certificate::new(
            Theorem::TiMonotoneSubadditive,
            Evidence::TranslationInvariant(evidence(half_grid.len())),
        )));
    }
    let violations = check_subadditive(&whole, &full_grid)?;
    let Some(top) = violations.first().copied() else {
        return Ok(Verdict::Certified(Certificate::new(
            Theorem::TiEvenSubadditive,
            Evidence::TranslationInvariant(evidence(full_grid.len())),
        )));
    };
    let d = whole.induced_metric();
    let [a, b, c] = top.mapped_triple();
    let violation = match triangle_margin(&d, (a, b, c)) {
        Ok(m) if m.m_min < 0.0 => Violation::triangle(&m),
        _ => Violation {
            kind: ViolationKind::Triangle(3),
            witness: vec![a, b, c],
            magnitude: top.gap,
        },
    };
    Ok(Verdict::Refuted {
        violation,
        pair: Some(top),
    })
}
