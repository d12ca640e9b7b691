use serde::Serialize;

use crate::expr::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LimitDirection {
    #[serde(rename = "+inf")]
    PlusInfinity,
    #[serde(rename = "-inf")]
    MinusInfinity,
}

impl LimitDirection {
    pub fn sign(self) -> f64 {
        match self {
            LimitDirection::PlusInfinity => 1.0,
            LimitDirection::MinusInfinity => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitStatus {
    Converged,
    Diverging,
    Oscillating,
    /// Neither settled nor recognisably diverging at the probed magnitudes.
    NotConverged,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitEstimate {
    pub value: f64,
    pub direction: LimitDirection,
    pub magnitudes_used: Vec<f64>,
    /// Raw evaluations `f(±m)` in magnitude order.
    pub samples: Vec<f64>,
    /// Relative change between the last two extrapolants.
    pub cauchy_residual: f64,
    pub status: LimitStatus,
}

impl LimitEstimate {
    pub fn is_converged(&self) -> bool {
        self.status == LimitStatus::Converged
    }
}

/// Limit of `f(λ)` as `λ → ±∞` from evaluations at `±m` for each magnitude.
///
/// Successive samples are combined assuming a `L + a/λ` tail: with
/// `r = m_{k+1}/m_k` the extrapolant is `(r·f_{k+1} − f_k)/(r − 1)`. The
/// estimate has converged when the last two extrapolants agree to
/// `tol·max(1, |L|)`; the reported value is the last extrapolant. Without
/// convergence the raw differences classify the tail: same sign and not
/// shrinking means diverging, alternating signs means oscillating.
///
/// `magnitudes` must be increasing and have at least three entries.
pub fn estimate_limit<F>(
    mut f: F,
    direction: LimitDirection,
    magnitudes: &[f64],
    tol: f64,
) -> Result<LimitEstimate, EvalError>
where
    F: FnMut(f64) -> Result<f64, EvalError>,
{
    debug_assert!(magnitudes.len() >= 3);
    debug_assert!(magnitudes.windows(2).all(|w| w[0] < w[1]));
    let s = direction.sign();
    let mut samples = Vec::with_capacity(magnitudes.len());
    for &m in magnitudes {
        samples.push(f(s * m)?);
    }
    let finish = |value: f64, residual: f64, status| LimitEstimate {
        value,
        direction,
        magnitudes_used: magnitudes.to_vec(),
        samples: samples.clone(),
        cauchy_residual: residual,
        status,
    };
    if samples.iter().any(|v| !v.is_finite()) {
        return Ok(finish(f64::NAN, f64::INFINITY, LimitStatus::Diverging));
    }

    let extrapolants: Vec<f64> = magnitudes
        .windows(2)
        .zip(samples.windows(2))
        .map(|(m, v)| {
            let r = m[1] / m[0];
            (r * v[1] - v[0]) / (r - 1.0)
        })
        .collect();
    let n = extrapolants.len();
    let value = extrapolants[n - 1];
    let residual = (extrapolants[n - 1] - extrapolants[n - 2]).abs() / value.abs().max(1.0);
    if residual <= tol {
        return Ok(finish(value, residual, LimitStatus::Converged));
    }

    let diffs: Vec<f64> = samples.windows(2).map(|w| w[1] - w[0]).collect();
    let same_sign = diffs.iter().all(|d| *d > 0.0) || diffs.iter().all(|d| *d < 0.0);
    let not_shrinking = diffs.windows(2).all(|w| w[1].abs() >= 0.5 * w[0].abs());
    let alternating = diffs.windows(2).all(|w| w[0] * w[1] < 0.0);
    let status = if same_sign && not_shrinking {
        LimitStatus::Diverging
    } else if alternating {
        LimitStatus::Oscillating
    } else {
        LimitStatus::NotConverged
    };
    Ok(finish(value, residual, status))
}
