//! Segment integrals of first partials and their monotonicity in the offset.
//!
//! `G_{y,H}^z(λ) = ∫_y^z ∂₁d(s, λ) ds` and `G_{x,V}^y(λ) = ∫_x^y ∂₂d(λ, s) ds`.
//! For a metric, `λ ↦ G_{y,H}^z(λ)` is non-decreasing on `(−∞, y]` and on
//! `[z, ∞)`. These are diagnostics for localising an H3 failure; they do not
//! enter certification.

use serde::Serialize;
use thiserror::Error;

use crate::autodiff::{gradient, Axis};
use crate::expr::{EvalError, Expr};
use crate::quadrature::{integrate, QuadError};

/// Absolute error target of the segment quadrature.
pub const G_ABS_TOL: f64 = 1e-8;
const MAX_PANELS: usize = 4000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GError {
    #[error("segment [{a}, {b}] at offset {lambda} crosses the diagonal")]
    CrossesDiagonal { a: f64, b: f64, lambda: f64 },
    #[error("partial derivative unavailable at ({0}, {1})")]
    Integrand(f64, f64),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

fn segment_integral(e: &Expr, a: f64, b: f64, lambda: f64, axis: Axis) -> Result<f64, GError> {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if lo < lambda && lambda < hi {
        return Err(GError::CrossesDiagonal { a, b, lambda });
    }
    let mut failure: Option<GError> = None;
    let result = integrate(
        |s| {
            let p = match axis {
                Axis::First => (s, lambda),
                Axis::Second => (lambda, s),
            };
            let partial = gradient(e, p).map_err(GError::from).and_then(|g| {
                let est = match axis {
                    Axis::First => g.d1,
                    Axis::Second => g.d2,
                };
                if est.is_reliable() {
                    Ok(est.value)
                } else {
                    Err(GError::Integrand(p.0, p.1))
                }
            });
            partial.unwrap_or_else(|err| {
                failure.get_or_insert(err);
                f64::NAN
            })
        },
        a,
        b,
        G_ABS_TOL,
        MAX_PANELS,
    );
    if let Some(err) = failure {
        return Err(err);
    }
    Ok(result?.value)
}

/// `G_{y,H}^z(λ) = ∫_y^z ∂₁d(s, λ) ds`; `λ` must not lie in `(y, z)`.
pub fn g_horizontal(e: &Expr, y: f64, z: f64, lambda: f64) -> Result<f64, GError> {
    segment_integral(e, y, z, lambda, Axis::First)
}

/// `G_{x,V}^y(λ) = ∫_x^y ∂₂d(λ, s) ds`; `λ` must not lie in `(x, y)`.
pub fn g_vertical(e: &Expr, x: f64, y: f64, lambda: f64) -> Result<f64, GError> {
    segment_integral(e, x, y, lambda, Axis::Second)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GInversion {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub g_lo: f64,
    pub g_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GMonotonicity {
    pub triple: [f64; 3],
    /// `(λ, G_{y,H}^z(λ))` for every admissible offset, sorted by `λ`.
    pub values: Vec<(f64, f64)>,
    pub inversions: Vec<GInversion>,
    /// Offsets outside `(−∞, y] ∪ [z, ∞)` or whose integral failed.
    pub rejected: Vec<(f64, String)>,
}

impl GMonotonicity {
    pub fn is_monotone(&self) -> bool {
        self.inversions.is_empty()
    }
}

/// Sample `λ ↦ G_{y,H}^z(λ)` on each legal interval and list every adjacent
/// pair where it decreases by more than the quadrature tolerance.
pub fn check_g_monotonicity(e: &Expr, triple: (f64, f64, f64), lambdas: &[f64]) -> GMonotonicity {
    let (x, y, z) = triple;
    let mut sorted = lambdas.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let mut values = Vec::new();
    let mut rejected = Vec::new();
    for &l in &sorted {
        if y < l && l < z {
            rejected.push((l, "offset lies between y and z".to_string()));
            continue;
        }
        match g_horizontal(e, y, z, l) {
            Ok(g) => values.push((l, g)),
            Err(err) => rejected.push((l, err.to_string())),
        }
    }
    let mut inversions = Vec::new();
    let (left, right): (Vec<(f64, f64)>, Vec<(f64, f64)>) = values.iter().partition(|v| v.0 <= y);
    for part in [left, right] {
        for w in part.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if hi.1 < lo.1 - 2.0 * G_ABS_TOL * (1.0 + lo.1.abs()) {
                inversions.push(GInversion {
                    lambda_lo: lo.0,
                    lambda_hi: hi.0,
                    g_lo: lo.1,
                    g_hi: hi.1,
                });
            }
        }
    }
    GMonotonicity {
        triple: [x, y, z],
        values,
        inversions,
        rejected,
    }
}
