//! The individual hypotheses checked on sampled sets.
//!
//! Each check returns a [`Check`]: evidence when the hypothesis holds on every
//! probe, a witness when it demonstrably fails, or a reason when the numerics
//! do not allow a decision.

use rayon::prelude::*;
use serde::Serialize;

use super::candidate::LambdaSet;
use super::config::CheckConfig;
use super::limits::{estimate_limit, LimitDirection, LimitEstimate};
use crate::autodiff::{cross_partial, gradient, DerivativeEstimate, Status, TOL_FD};
use crate::expr::{eval_xy, EvalError, Expr};
use crate::grid;
use crate::search::{Violation, ViolationKind};

#[derive(Debug, Clone, PartialEq)]
pub enum Check<E, W> {
    Pass(E),
    Fail(W),
    Inconclusive(String),
}

impl<E, W> Check<E, W> {
    pub fn passed(&self) -> bool {
        matches!(self, Check::Pass(_))
    }
}

fn domain(p: (f64, f64), err: &EvalError) -> String {
    format!("evaluation failed at ({:e}, {:e}): {err}", p.0, p.1)
}

/// Evaluate `e` on every point, in order, or report the first failure.
fn eval_all(e: &Expr, pts: &[(f64, f64)]) -> Result<Vec<f64>, String> {
    pts.par_iter()
        .map(|&p| eval_xy(e, p.0, p.1).map_err(|err| domain(p, &err)))
        .collect()
}

fn diagonal_probes(cfg: &CheckConfig, pts: &[(f64, f64)]) -> Vec<f64> {
    let mut xs = grid::grid1d(cfg);
    xs.extend(pts.iter().map(|p| p.0));
    grid::sorted_unique(xs)
}

// ---------------------------------------------------------------- H1, H2

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct H1Evidence {
    pub diagonal_points: usize,
    pub off_diagonal_points: usize,
    pub max_abs_diagonal: f64,
    pub min_off_diagonal: f64,
}

/// `d(x,x) = 0` and `d(x,y) > 0` off the diagonal.
///
/// The diagonal is probed at every grid abscissa; the off-diagonal test uses
/// the 2-D grid. Off the diagonal, `d ≤ 0` is a witness (the one closest to
/// the origin, smallest `|x| + |y|`, is reported) while `0 < d ≤ tol_pos`
/// only makes the check inconclusive.
pub fn check_h1(e: &Expr, cfg: &CheckConfig) -> Check<H1Evidence, Violation> {
    let pts: Vec<(f64, f64)> = grid::grid2d(cfg).into_iter().filter(|p| p.0 != p.1).collect();
    let xs = diagonal_probes(cfg, &pts);
    let diag: Vec<(f64, f64)> = xs.iter().map(|&x| (x, x)).collect();
    let dv = match eval_all(e, &diag) {
        Ok(v) => v,
        Err(msg) => return Check::Inconclusive(msg),
    };
    if let Some((x, v)) = xs.iter().zip(&dv).find(|(_, v)| v.abs() > cfg.tol_pos) {
        return Check::Fail(Violation {
            kind: ViolationKind::Positivity,
            witness: vec![*x, *x],
            magnitude: v.abs(),
        });
    }
    let ov = match eval_all(e, &pts) {
        Ok(v) => v,
        Err(msg) => return Check::Inconclusive(msg),
    };
    let nearest = |a: &(&(f64, f64), &f64), b: &(&(f64, f64), &f64)| {
        (a.0 .0.abs() + a.0 .1.abs()).total_cmp(&(b.0 .0.abs() + b.0 .1.abs()))
    };
    let worst = pts.iter().zip(&ov).filter(|(_, v)| **v <= 0.0).min_by(nearest);
    if let Some((p, v)) = worst {
        return Check::Fail(Violation {
            kind: ViolationKind::Positivity,
            witness: vec![p.0, p.1],
            magnitude: -v,
        });
    }
    // Positive but too small to tell apart from zero: no witness, no evidence.
    if let Some((p, v)) = pts.iter().zip(&ov).filter(|(_, v)| **v <= cfg.tol_pos).min_by(nearest) {
        return Check::Inconclusive(format!(
            "d({:e}, {:e}) = {v:e} is positive but not above tol_pos = {:e}",
            p.0, p.1, cfg.tol_pos
        ));
    }
    Check::Pass(H1Evidence {
        diagonal_points: xs.len(),
        off_diagonal_points: pts.len(),
        max_abs_diagonal: dv.iter().fold(0.0, |m, v| m.max(v.abs())),
        min_off_diagonal: ov.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct H2Evidence {
    /// `d` and its variable swap have the same canonical tree.
    pub structural: bool,
    pub points_checked: usize,
    pub max_asymmetry: f64,
}

/// `d(x,y) = d(y,x)`, structurally when possible, otherwise on the 2-D grid
/// within `tol_sym·(1 + |d(x,y)|)`.
pub fn check_h2(e: &Expr, cfg: &CheckConfig) -> Check<H2Evidence, Violation> {
    if e.canonical() == e.swap_vars().canonical() {
        return Check::Pass(H2Evidence {
            structural: true,
            points_checked: 0,
            max_asymmetry: 0.0,
        });
    }
    let pts: Vec<(f64, f64)> = grid::grid2d(cfg).into_iter().filter(|p| p.0 != p.1).collect();
    let swapped: Vec<(f64, f64)> = pts.iter().map(|p| (p.1, p.0)).collect();
    let (a, b) = match (eval_all(e, &pts), eval_all(e, &swapped)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(msg), _) | (_, Err(msg)) => return Check::Inconclusive(msg),
    };
    let mut max_asym = 0.0f64;
    let mut worst: Option<(usize, f64)> = None;
    for (i, (u, v)) in a.iter().zip(&b).enumerate() {
        let gap = (u - v).abs();
        max_asym = max_asym.max(gap);
        if gap > cfg.tol_sym * (1.0 + u.abs()) && worst.is_none_or(|(_, g)| gap > g) {
            worst = Some((i, gap));
        }
    }
    match worst {
        Some((i, gap)) => Check::Fail(Violation {
            kind: ViolationKind::Symmetry,
            witness: vec![pts[i].0, pts[i].1],
            magnitude: gap,
        }),
        None => Check::Pass(H2Evidence {
            structural: false,
            points_checked: pts.len(),
            max_asymmetry: max_asym,
        }),
    }
}

// ---------------------------------------------------------------- H3

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum H3Mode {
    /// The candidate as given: points near Λ are excluded, kink points are
    /// recorded and make the check inconclusive.
    Raw,
    /// A reparametrized candidate expected to be C² off Δ: Λ is not excluded
    /// and kink points use the difference-quotient estimate.
    Reparametrized,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct H3Evidence {
    pub points_checked: usize,
    pub min_cross_partial: f64,
    pub min_at: [f64; 2],
    pub diag_band_rel: f64,
    pub lambda_band_rel: Option<f64>,
    /// Smallest relative band around Δ down to which every near-diagonal
    /// probe still produced a usable non-negative estimate.
    pub smallest_diag_band_rel: f64,
    pub kink_points: usize,
    pub skipped: usize,
    pub reparametrized: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct H3Witness {
    pub x: f64,
    pub y: f64,
    pub cross_partial: f64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct H3Run {
    pub outcome: Check<H3Evidence, H3Witness>,
    /// Points where a kink node sat on its switching point.
    pub kink_points: Vec<(f64, f64)>,
}

enum Probe {
    /// `slack` is the estimate's own uncertainty (0 for exact values).
    Value { p: (f64, f64), v: f64, d: f64, slack: f64 },
    Kink((f64, f64)),
    Skip,
}

fn probe_cross_partial(e: &Expr, p: (f64, f64), mode: H3Mode) -> Probe {
    let Ok(d) = eval_xy(e, p.0, p.1) else {
        return Probe::Skip;
    };
    match cross_partial(e, p) {
        Ok(est) if est.kink_at_point && mode == H3Mode::Raw => Probe::Kink(p),
        Ok(est) if est.is_reliable() && est.value.is_finite() => Probe::Value {
            p,
            v: est.value,
            d,
            slack: fd_slack(&est),
        },
        Ok(est) if est.kink_at_point => Probe::Kink(p),
        _ => Probe::Skip,
    }
}

/// Uncertainty of an estimate: zero when exact, otherwise twice the ladder's
/// acceptance threshold. Residuals that halve per step sum to at most twice
/// the last one, which is what an accepted extrapolant may still be off by.
fn fd_slack(est: &DerivativeEstimate) -> f64 {
    match est.status {
        Status::ExactAd => 0.0,
        _ => 2.0 * est.residual.max(TOL_FD * est.value.abs().max(1.0)),
    }
}

/// Below zero by more than the sign tolerance plus the estimate's residual.
fn is_negative(v: f64, d: f64, slack: f64, cfg: &CheckConfig) -> bool {
    v < -(cfg.tol_sign * (1.0 + d.abs()) + slack)
}

const NEAR_DIAGONAL_PROBES: [f64; 8] = [-100.0, -10.0, -1.0, -0.1, 0.1, 1.0, 10.0, 100.0];
const BAND_SHRINK_STEPS: i32 = 6;

/// `∂₁₂ d ≥ 0` off the diagonal band (and off the Λ band in raw mode).
pub fn check_h3(e: &Expr, lambda: LambdaSet, mode: H3Mode, cfg: &CheckConfig) -> H3Run {
    let exclude_lambda = mode == H3Mode::Raw && !lambda.is_empty();
    let pts: Vec<(f64, f64)> = grid::grid2d(cfg)
        .into_iter()
        .filter(|&(x, y)| (x - y).abs() >= grid::band(cfg.diag_band_rel, x, y))
        .filter(|&(x, y)| !exclude_lambda || lambda.distance(x, y) >= grid::band(cfg.lambda_band_rel, x, y))
        .collect();
    let probes: Vec<Probe> = pts.par_iter().map(|&p| probe_cross_partial(e, p, mode)).collect();

    let mut kinks = Vec::new();
    let mut skipped = 0usize;
    let mut min: Option<((f64, f64), f64)> = None;
    let mut worst: Option<H3Witness> = None;
    for probe in &probes {
        match *probe {
            Probe::Value { p, v, d, slack } => {
                if min.is_none_or(|(_, m)| v < m) {
                    min = Some((p, v));
                }
                if is_negative(v, d, slack, cfg) && worst.is_none_or(|w| v / (1.0 + d.abs()) < w.cross_partial / (1.0 + w.d.abs())) {
                    worst = Some(H3Witness {
                        x: p.0,
                        y: p.1,
                        cross_partial: v,
                        d,
                    });
                }
            }
            Probe::Kink(p) => kinks.push(p),
            Probe::Skip => skipped += 1,
        }
    }
    if let Some(w) = worst {
        return H3Run {
            outcome: Check::Fail(w),
            kink_points: kinks,
        };
    }

    // Shrink the band around Δ while the estimates stay usable.
    let near: Vec<f64> = NEAR_DIAGONAL_PROBES
        .iter()
        .copied()
        .chain(lambda.is_empty().then_some(0.0))
        .collect();
    let shrink: Vec<(f64, Option<H3Witness>)> = near
        .par_iter()
        .flat_map_iter(|&x0| [1.0, -1.0].map(move |s| (x0, s)))
        .map(|(x0, s)| {
            let base = grid::band(cfg.diag_band_rel, x0, x0);
            let mut reached = cfg.diag_band_rel;
            for j in 0..=BAND_SHRINK_STEPS {
                let scale = 10f64.powi(-j);
                let p = (x0, x0 + s * base * scale);
                match probe_cross_partial(e, p, mode) {
                    Probe::Value { v, d, slack, .. } if is_negative(v, d, slack, cfg) => {
                        let w = H3Witness {
                            x: p.0,
                            y: p.1,
                            cross_partial: v,
                            d,
                        };
                        return (reached, Some(w));
                    }
                    Probe::Value { .. } => reached = cfg.diag_band_rel * scale,
                    _ => break,
                }
            }
            (reached, None)
        })
        .collect();
    if let Some(w) = shrink.iter().find_map(|s| s.1) {
        return H3Run {
            outcome: Check::Fail(w),
            kink_points: kinks,
        };
    }
    let smallest = shrink.iter().map(|s| s.0).fold(0.0, f64::max);

    let considered = pts.len();
    let skip_fraction = skipped as f64 / considered.max(1) as f64;
    let outcome = if skip_fraction > cfg.max_skip_fraction {
        Check::Inconclusive(format!(
            "cross partial unusable at {skipped} of {considered} points ({:.1}%)",
            100.0 * skip_fraction
        ))
    } else if mode == H3Mode::Raw && !kinks.is_empty() {
        Check::Inconclusive(format!("kink nodes switch at {} points off the diagonal", kinks.len()))
    } else {
        let (at, m) = min.unwrap_or(((f64::NAN, f64::NAN), f64::NAN));
        Check::Pass(H3Evidence {
            points_checked: considered - skipped,
            min_cross_partial: m,
            min_at: [at.0, at.1],
            diag_band_rel: cfg.diag_band_rel,
            lambda_band_rel: exclude_lambda.then_some(cfg.lambda_band_rel),
            smallest_diag_band_rel: smallest,
            kink_points: kinks.len(),
            skipped,
            reparametrized: mode == H3Mode::Reparametrized,
        })
    };
    H3Run {
        outcome,
        kink_points: kinks,
    }
}

// ---------------------------------------------------------------- H4

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneEvidence {
    pub probes: Vec<f64>,
    pub samples_per_side: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EqualLimits {
    pub c: f64,
    pub plus: LimitEstimate,
    pub minus: LimitEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifferenceLimits {
    pub a: f64,
    pub b: f64,
    pub plus: LimitEstimate,
    pub minus: LimitEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RingMaximum {
    pub radius: f64,
    pub max_gradient_norm: f64,
    pub points: usize,
    pub skipped: usize,
}

/// Evidence for whichever boundary hypothesis held.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "hypothesis", content = "data")]
pub enum H4Evidence {
    #[serde(rename = "H4A")]
    Monotone(MonotoneEvidence),
    #[serde(rename = "H4B")]
    LimitDifferences(Vec<DifferenceLimits>),
    #[serde(rename = "H4C")]
    VanishingGradient(Vec<RingMaximum>),
    #[serde(rename = "H4D")]
    EqualLimits(Vec<EqualLimits>),
}

pub const H4A_PROBES: [f64; 11] = [0.0, 0.1, -0.1, 1.0, -1.0, 2.0, -2.0, 10.0, -10.0, 100.0, -100.0];
pub const H4D_PROBES: [f64; 11] = [0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0, 5.0, -5.0, 10.0, -10.0];
pub const H4B_POINTS: [f64; 10] = [-5.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 5.0, 10.0];
const RING_POINTS: usize = 64;

/// Offsets `10^s`, `s = −3, −2.75, …, 6`.
fn monotone_offsets() -> Vec<f64> {
    (0..=36).map(|i| 10f64.powf(-3.0 + 0.25 * i as f64)).collect()
}

/// `t ↦ d(t, a)` non-increasing left of `a` and non-decreasing right of it.
pub fn check_h4a(e: &Expr, cfg: &CheckConfig) -> Check<H4Evidence, String> {
    let offsets = monotone_offsets();
    let failures: Vec<Option<String>> = H4A_PROBES
        .par_iter()
        .map(|&a| {
            for side in [1.0, -1.0] {
                let mut prev = (a, eval_xy(e, a, a).ok()?);
                for &o in &offsets {
                    let t = a + side * o;
                    let v = match eval_xy(e, t, a) {
                        Ok(v) => v,
                        Err(err) => return Some(domain((t, a), &err)),
                    };
                    if v < prev.1 - cfg.tol_sign * (1.0 + prev.1.abs()) {
                        return Some(format!(
                            "H4A: d(t, {a:e}) decreases moving away from {a:e}: d({:e}, {a:e}) = {:e} > d({t:e}, {a:e}) = {v:e}",
                            prev.0, prev.1
                        ));
                    }
                    prev = (t, v);
                }
            }
            None
        })
        .collect();
    match failures.into_iter().flatten().next() {
        Some(reason) => Check::Fail(reason),
        None => Check::Pass(H4Evidence::Monotone(MonotoneEvidence {
            probes: H4A_PROBES.to_vec(),
            samples_per_side: offsets.len(),
        })),
    }
}

fn scaled(cfg: &CheckConfig, s: f64) -> Vec<f64> {
    cfg.limit_magnitudes.iter().map(|m| m * s.max(1.0)).collect()
}

fn limit_pair<F>(f: F, mags: &[f64], tol: f64) -> Result<(LimitEstimate, LimitEstimate), EvalError>
where
    F: Fn(f64) -> Result<f64, EvalError>,
{
    Ok((
        estimate_limit(&f, LimitDirection::PlusInfinity, mags, tol)?,
        estimate_limit(&f, LimitDirection::MinusInfinity, mags, tol)?,
    ))
}

fn describe_limit(l: &LimitEstimate) -> String {
    format!("{:?} (value {:e}, residual {:e})", l.status, l.value, l.cauchy_residual)
}

/// `lim_{λ→−∞} d(c,λ) = lim_{λ→+∞} d(c,λ)`, both finite, for every probe `c`.
pub fn check_h4d(e: &Expr, cfg: &CheckConfig) -> Check<H4Evidence, String> {
    let rows: Vec<Result<EqualLimits, String>> = H4D_PROBES
        .par_iter()
        .map(|&c| {
            let mags = scaled(cfg, c.abs());
            let (plus, minus) =
                limit_pair(|l| eval_xy(e, c, l), &mags, cfg.tol_limit).map_err(|err| format!("H4D at c = {c:e}: {err}"))?;
            Ok(EqualLimits { c, plus, minus })
        })
        .collect();
    let mut evidence = Vec::with_capacity(rows.len());
    for row in rows {
        let row = match row {
            Ok(r) => r,
            Err(msg) => return Check::Fail(msg),
        };
        for l in [&row.plus, &row.minus] {
            if !l.is_converged() {
                return Check::Fail(format!("H4D at c = {:e}: limit {}", row.c, describe_limit(l)));
            }
        }
        let gap = (row.plus.value - row.minus.value).abs();
        if gap > cfg.tol_limit * row.plus.value.abs().max(1.0) {
            return Check::Fail(format!(
                "H4D at c = {:e}: limits differ, {:e} at +inf vs {:e} at -inf",
                row.c, row.plus.value, row.minus.value
            ));
        }
        evidence.push(row);
    }
    Check::Pass(H4Evidence::EqualLimits(evidence))
}

/// `lim_{λ→+∞}[d(b,λ) − d(a,λ)] ≤ lim_{λ→−∞}[d(b,λ) − d(a,λ)]` for probe pairs `a < b`.
pub fn check_h4b(e: &Expr, cfg: &CheckConfig) -> Check<H4Evidence, String> {
    let pairs: Vec<(f64, f64)> = H4B_POINTS
        .iter()
        .enumerate()
        .flat_map(|(i, &a)| H4B_POINTS[i + 1..].iter().map(move |&b| (a, b)))
        .collect();
    let rows: Vec<Result<DifferenceLimits, String>> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let mags = scaled(cfg, a.abs().max(b.abs()));
            let f = |l| Ok(eval_xy(e, b, l)? - eval_xy(e, a, l)?);
            let (plus, minus) = limit_pair(f, &mags, cfg.tol_limit).map_err(|err| format!("H4B at ({a:e}, {b:e}): {err}"))?;
            Ok(DifferenceLimits { a, b, plus, minus })
        })
        .collect();
    let mut evidence = Vec::with_capacity(rows.len());
    for row in rows {
        let row = match row {
            Ok(r) => r,
            Err(msg) => return Check::Inconclusive(msg),
        };
        for l in [&row.plus, &row.minus] {
            if !l.is_converged() {
                return Check::Inconclusive(format!(
                    "H4B at ({:e}, {:e}): limit {}",
                    row.a,
                    row.b,
                    describe_limit(l)
                ));
            }
        }
        if row.plus.value > row.minus.value + cfg.tol_limit * row.minus.value.abs().max(1.0) {
            return Check::Fail(format!(
                "H4B at ({:e}, {:e}): {:e} at +inf exceeds {:e} at -inf",
                row.a, row.b, row.plus.value, row.minus.value
            ));
        }
        evidence.push(row);
    }
    Check::Pass(H4Evidence::LimitDifferences(evidence))
}

/// Points of the square `max(|x|,|y|) = r`, evenly spaced along its perimeter.
fn square_ring(r: f64) -> impl Iterator<Item = (f64, f64)> {
    (0..RING_POINTS).map(move |i| {
        let t = 8.0 * r * i as f64 / RING_POINTS as f64;
        let side = (t / (2.0 * r)).floor();
        let u = t - side * 2.0 * r - r;
        match side as i32 {
            0 => (r, u),
            1 => (-u, r),
            2 => (-r, -u),
            _ => (u, -r),
        }
    })
}

/// The largest gradient norm on the rings `R ≤ ‖p‖∞ ≤ 2R` decreases with `R`
/// and ends below `tol_grad`.
pub fn check_h4c(e: &Expr, cfg: &CheckConfig) -> Check<H4Evidence, String> {
    let maxima: Vec<RingMaximum> = cfg
        .grad_radii
        .par_iter()
        .map(|&radius| {
            let pts: Vec<(f64, f64)> = [1.0, 1.5, 2.0]
                .iter()
                .flat_map(|k| square_ring(k * radius))
                .filter(|&(x, y)| (x - y).abs() >= grid::band(cfg.diag_band_rel, x, y))
                .collect();
            let mut max = 0.0f64;
            let mut skipped = 0;
            for &p in &pts {
                match gradient(e, p) {
                    Ok(g) if g.d1.is_reliable() && g.d2.is_reliable() && g.norm.is_finite() => max = max.max(g.norm),
                    _ => skipped += 1,
                }
            }
            RingMaximum {
                radius,
                max_gradient_norm: max,
                points: pts.len(),
                skipped,
            }
        })
        .collect();
    if let Some(r) = maxima.iter().find(|r| r.skipped as f64 > cfg.max_skip_fraction * r.points as f64) {
        return Check::Inconclusive(format!(
            "H4C: gradient unusable at {} of {} ring points at R = {:e}",
            r.skipped, r.points, r.radius
        ));
    }
    if let Some(w) = maxima.windows(2).find(|w| w[1].max_gradient_norm >= w[0].max_gradient_norm) {
        return Check::Fail(format!(
            "H4C: ring maximum does not decrease, {:e} at R = {:e} then {:e} at R = {:e}",
            w[0].max_gradient_norm, w[0].radius, w[1].max_gradient_norm, w[1].radius
        ));
    }
    match maxima.last() {
        Some(last) if last.max_gradient_norm <= cfg.tol_grad => Check::Pass(H4Evidence::VanishingGradient(maxima)),
        Some(last) => Check::Fail(format!(
            "H4C: gradient norm {:e} at R = {:e} exceeds {:e}",
            last.max_gradient_norm, last.radius, cfg.tol_grad
        )),
        None => Check::Inconclusive("H4C: no radii configured".into()),
    }
}
