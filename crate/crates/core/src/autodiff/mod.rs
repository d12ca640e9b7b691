//! Derivatives of two-variable expressions.
//!
//! Smooth points go through hyper-dual numbers and are exact up to rounding.
//! Points where a kink node (`abs`, `sgn`, `min`, `max`, `pw`) sits on its
//! switching point fall back to difference-quotient ladders.
//!
//! One-sided directional derivatives follow the forward-quotient convention
//! `∂ᵥ⁺ d(p) = lim_{h→0⁺} (d(p + h·v) − d(p)) / h`. The "minus" partials are
//! this operator with a negated axis vector, so `∂₂⁻` means `v = (0, −1)`:
//! for `d = |y − x|` at the origin both `∂₂⁺` and `∂₂⁻` equal `+1`.

mod fd;
mod hyperdual;

use serde::Serialize;

use crate::expr::{eval, eval_tracked, EvalEnv, EvalError, Expr, KinkTracker};

pub use fd::{Ladder, Sample, CONFIRMATIONS, K_FIRST, K_LAST, TOL_FD};
pub use hyperdual::HyperDual;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    ExactAd,
    ConvergedFd,
    NotConverged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeEstimate {
    pub value: f64,
    pub status: Status,
    /// Last change between successive extrapolants (0 for exact values).
    pub residual: f64,
    pub steps_used: usize,
    /// `Some(±1)` when the quotients grow without bound with that sign.
    pub unbounded: Option<f64>,
    /// A kink node was on its switching point, so AD was not trusted.
    pub kink_at_point: bool,
}

impl DerivativeEstimate {
    fn exact(value: f64) -> Self {
        DerivativeEstimate {
            value,
            status: Status::ExactAd,
            residual: 0.0,
            steps_used: 0,
            unbounded: None,
            kink_at_point: false,
        }
    }

    pub fn is_reliable(&self) -> bool {
        self.status != Status::NotConverged
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradientEstimate {
    pub d1: DerivativeEstimate,
    pub d2: DerivativeEstimate,
    pub norm: f64,
}

/// Coordinate axis of a partial derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    First,
    Second,
}

/// Sign of the axis vector in a one-sided derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

/// Natural step scale at a point: `max(1, |x|, |y|)`.
pub fn point_scale(p: (f64, f64)) -> f64 {
    1f64.max(p.0.abs()).max(p.1.abs())
}

fn f64_at(e: &Expr, x: f64, y: f64) -> Result<f64, EvalError> {
    eval(e, &EvalEnv::xy(x, y))
}

/// Evaluate with hyper-dual seeds; `None` when a kink node was hit.
fn hyper(e: &Expr, x: HyperDual, y: HyperDual) -> Result<Option<HyperDual>, EvalError> {
    let mut kinks = KinkTracker::new(point_scale((x.v, y.v)));
    let r = eval_tracked(e, &EvalEnv::xy(x, y), &mut kinks)?;
    Ok((!kinks.hit()).then_some(r))
}

/// Mixed partial `∂₁₂ d` at `p`.
///
/// Exact via hyper-duals unless a kink sits at `p`, in which case a
/// Richardson-extrapolated four-point stencil is used and flagged.
pub fn cross_partial(e: &Expr, p: (f64, f64)) -> Result<DerivativeEstimate, EvalError> {
    match hyper(e, HyperDual::seed_x(p.0), HyperDual::seed_y(p.1)) {
        Ok(Some(r)) => Ok(DerivativeEstimate::exact(r.dxy)),
        Ok(None) | Err(EvalError::Domain { .. }) => {
            let mut est = cross_partial_fd(e, p)?;
            est.kink_at_point = true;
            Ok(est)
        }
        Err(err) => Err(err),
    }
}

/// Mixed partial from the four-point stencil only.
///
/// The step never exceeds a quarter of `|x − y|`, so the stencil stays on
/// one side of the diagonal.
pub fn cross_partial_fd(e: &Expr, p: (f64, f64)) -> Result<DerivativeEstimate, EvalError> {
    let (x, y) = p;
    let mut h0 = point_scale(p);
    let gap = (x - y).abs();
    if gap > 0.0 {
        h0 = h0.min(0.25 * gap * (2f64).powi(K_FIRST));
    }
    Ladder::new(h0, 2).run_sampled(|h| {
        let terms = [
            (1.0, f64_at(e, x + h, y + h)?),
            (-1.0, f64_at(e, x + h, y - h)?),
            (-1.0, f64_at(e, x - h, y + h)?),
            (1.0, f64_at(e, x - h, y - h)?),
        ];
        Ok(Sample::combination(&terms, 4.0 * h * h))
    })
}

/// One-sided derivative along an arbitrary direction `v`.
pub fn directional(
    e: &Expr,
    p: (f64, f64),
    v: (f64, f64),
) -> Result<DerivativeEstimate, EvalError> {
    directional_with_scale(e, p, v, point_scale(p))
}

/// [`directional`] with an explicit ladder scale `h0` (first step `h0·2^-8`).
pub fn directional_with_scale(
    e: &Expr,
    p: (f64, f64),
    v: (f64, f64),
    h0: f64,
) -> Result<DerivativeEstimate, EvalError> {
    let base = f64_at(e, p.0, p.1)?;
    Ladder::new(h0, 1).run_sampled(|h| {
        let step = f64_at(e, p.0 + h * v.0, p.1 + h * v.1)?;
        Ok(Sample::combination(&[(1.0, step), (-1.0, base)], h))
    })
}

/// Ladder scale at `p` that keeps the first steps from reaching the diagonal:
/// `min(max(1,|x|,|y|), 2^8·|x − y|/2)` off the diagonal.
pub fn off_diagonal_scale(p: (f64, f64)) -> f64 {
    let s = point_scale(p);
    let gap = (p.0 - p.1).abs();
    if gap > 0.0 {
        s.min(0.5 * gap * (2f64).powi(K_FIRST))
    } else {
        s
    }
}

/// `∂₁±` / `∂₂±` as forward quotients along `±e₁` / `±e₂`.
pub fn one_sided_partial(
    e: &Expr,
    p: (f64, f64),
    axis: Axis,
    side: Side,
) -> Result<DerivativeEstimate, EvalError> {
    let s = match side {
        Side::Plus => 1.0,
        Side::Minus => -1.0,
    };
    let v = match axis {
        Axis::First => (s, 0.0),
        Axis::Second => (0.0, s),
    };
    directional(e, p, v)
}

/// First partials and their Euclidean norm.
pub fn gradient(e: &Expr, p: (f64, f64)) -> Result<GradientEstimate, EvalError> {
    let (d1, d2) = match hyper(e, HyperDual::seed_x(p.0), HyperDual::seed_y(p.1)) {
        Ok(Some(r)) => (DerivativeEstimate::exact(r.dx), DerivativeEstimate::exact(r.dy)),
        Ok(None) | Err(EvalError::Domain { .. }) => {
            let mut d1 = central_partial(e, p, Axis::First)?;
            let mut d2 = central_partial(e, p, Axis::Second)?;
            d1.kink_at_point = true;
            d2.kink_at_point = true;
            (d1, d2)
        }
        Err(err) => return Err(err),
    };
    Ok(GradientEstimate {
        d1,
        d2,
        norm: d1.value.hypot(d2.value),
    })
}

fn central_partial(e: &Expr, p: (f64, f64), axis: Axis) -> Result<DerivativeEstimate, EvalError> {
    let (ux, uy) = match axis {
        Axis::First => (1.0, 0.0),
        Axis::Second => (0.0, 1.0),
    };
    Ladder::new(off_diagonal_scale(p), 2).run_sampled(|h| {
        let fp = f64_at(e, p.0 + h * ux, p.1 + h * uy)?;
        let fm = f64_at(e, p.0 - h * ux, p.1 - h * uy)?;
        Ok(Sample::combination(&[(1.0, fp), (-1.0, fm)], 2.0 * h))
    })
}

/// First and second partials at a point, exact via hyper-duals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hessian {
    pub d1: f64,
    pub d2: f64,
    pub d11: f64,
    pub d12: f64,
    pub d22: f64,
}

impl Hessian {
    pub fn entries(&self) -> [f64; 5] {
        [self.d1, self.d2, self.d11, self.d12, self.d22]
    }
}

/// All partials up to second order, or `None` when a kink node or a
/// non-finite derivative is met at `p`.
pub fn hessian(e: &Expr, p: (f64, f64)) -> Option<Hessian> {
    hessian_with(e, p, true)
}

/// [`hessian`] without the kink guard.
///
/// For points that are known to be off every switching set but may lie
/// closer to one than the kink threshold, e.g. `abs(x^5)` at `x = 10^-3`.
pub fn hessian_unguarded(e: &Expr, p: (f64, f64)) -> Option<Hessian> {
    hessian_with(e, p, false)
}

fn hessian_with(e: &Expr, p: (f64, f64), guard: bool) -> Option<Hessian> {
    let (x, y) = p;
    let run = |a: HyperDual, b: HyperDual| -> Option<HyperDual> {
        if guard {
            hyper(e, a, b).ok()?
        } else {
            eval(e, &EvalEnv::xy(a, b)).ok()
        }
    };
    let mixed = run(HyperDual::seed_x(x), HyperDual::seed_y(y))?;
    let xx = run(HyperDual::seed_both(x), HyperDual::constant(y))?;
    let yy = run(HyperDual::constant(x), HyperDual::seed_both(y))?;
    Some(Hessian {
        d1: mixed.dx,
        d2: mixed.dy,
        d11: xx.dxy,
        d12: mixed.dxy,
        d22: yy.dxy,
    })
}
