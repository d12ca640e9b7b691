//! Difference-quotient ladders with one level of Richardson extrapolation.

use crate::expr::EvalError;

use super::{DerivativeEstimate, Status};

/// First and last ladder exponents: `h_k = scale · 2^{-k}`.
pub const K_FIRST: i32 = 8;
pub const K_LAST: i32 = 28;

/// Default relative convergence tolerance.
pub const TOL_FD: f64 = 1e-7;

/// Consecutive agreeing extrapolant pairs required before the ladder stops.
pub const CONFIRMATIONS: usize = 2;

/// Growth factor per halving above which a ladder is treated as diverging.
const BLOWUP_RATIO: f64 = 1.2;
/// Number of consecutive growing steps needed to call divergence.
const BLOWUP_RUN: usize = 6;

/// Ladder parameters.
#[derive(Debug, Clone, Copy)]
pub struct Ladder {
    /// Step at `k = 0`; the first step used is `h0 · 2^{-K_FIRST}`.
    pub h0: f64,
    /// Leading truncation order of the raw quotient (1 one-sided, 2 central).
    pub order: i32,
    pub tol: f64,
}

impl Ladder {
    pub fn new(h0: f64, order: i32) -> Self {
        Ladder {
            h0,
            order,
            tol: TOL_FD,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Run the ladder on the quotient `q(h)` and extrapolate towards `h → 0`.
    ///
    /// Stops once [`CONFIRMATIONS`] successive pairs of extrapolants agree to
    /// `tol` (relative, floored at 1). When that never happens, the
    /// extrapolant with the smallest successive change is returned with
    /// status [`Status::NotConverged`].
    pub fn run<Q>(&self, mut q: Q) -> Result<DerivativeEstimate, EvalError>
    where
        Q: FnMut(f64) -> Result<f64, EvalError>,
    {
        self.run_sampled(|h| q(h).map(Sample::exact))
    }

    /// As [`Ladder::run`], for quotients that carry a rounding bound.
    ///
    /// A pair only counts as agreeing when the rounding bound of the newer
    /// extrapolant is itself below the threshold: once cancellation
    /// dominates, successive quotients can repeat the same few ulps and agree
    /// perfectly while meaning nothing.
    pub fn run_sampled<Q>(&self, mut q: Q) -> Result<DerivativeEstimate, EvalError>
    where
        Q: FnMut(f64) -> Result<Sample, EvalError>,
    {
        let factor = (2.0f64).powi(self.order);
        let mut prev: Option<Sample> = None;
        let mut extrapolants: Vec<f64> = Vec::with_capacity((K_LAST - K_FIRST) as usize + 1);
        let mut best = (f64::INFINITY, f64::NAN);
        let mut steps = 0;
        let mut agreed = 0;
        let mut last_residual = 0.0f64;
        for k in K_FIRST..=K_LAST {
            let h = self.h0 * (0.5f64).powi(k);
            let sk = q(h)?;
            steps += 1;
            if let Some(sp) = prev {
                let r = (factor * sk.value - sp.value) / (factor - 1.0);
                let noise = (factor * sk.noise + sp.noise) / (factor - 1.0);
                if let Some(&last) = extrapolants.last() {
                    let residual: f64 = (r - last).abs();
                    let prev_residual = last_residual;
                    last_residual = residual;
                    let threshold = self.tol * r.abs().max(1.0);
                    if residual.is_finite() && residual < best.0 && noise <= threshold {
                        best = (residual, r);
                    }
                    if residual <= threshold && noise <= threshold {
                        agreed += 1;
                    } else {
                        agreed = 0;
                    }
                    if agreed >= CONFIRMATIONS {
                        return Ok(DerivativeEstimate {
                            value: r,
                            status: Status::ConvergedFd,
                            residual: residual.max(prev_residual),
                            steps_used: steps,
                            unbounded: None,
                            kink_at_point: false,
                        });
                    }
                }
                extrapolants.push(r);
            }
            prev = Some(sk);
        }
        let unbounded = blowup_sign(&extrapolants);
        let value = if best.1.is_nan() {
            extrapolants.last().copied().unwrap_or(f64::NAN)
        } else {
            best.1
        };
        Ok(DerivativeEstimate {
            value,
            status: Status::NotConverged,
            residual: best.0,
            steps_used: steps,
            unbounded,
            kink_at_point: false,
        })
    }
}

/// One difference quotient and a bound on its rounding error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub value: f64,
    pub noise: f64,
}

/// Evaluation error assumed per function value, in units of `ε·|f|`.
const EVAL_ULPS: f64 = 2.0;

impl Sample {
    pub fn exact(value: f64) -> Self {
        Sample { value, noise: 0.0 }
    }

    /// `Σ cᵢ·fᵢ / denom`, with each `fᵢ` trusted to `EVAL_ULPS` ulps.
    pub fn combination(terms: &[(f64, f64)], denom: f64) -> Self {
        let (sum, mass) = terms
            .iter()
            .fold((0.0, 0.0), |(s, m), &(c, f)| (s + c * f, m + (c * f).abs()));
        Sample {
            value: sum / denom,
            noise: EVAL_ULPS * f64::EPSILON * mass / denom.abs(),
        }
    }
}

/// Sign of a sequence whose tail keeps one sign while growing geometrically.
fn blowup_sign(seq: &[f64]) -> Option<f64> {
    if seq.len() < BLOWUP_RUN + 1 {
        return None;
    }
    let tail = &seq[seq.len() - BLOWUP_RUN - 1..];
    let sign = tail[0].signum();
    if tail[0] == 0.0 {
        return None;
    }
    let growing = tail.windows(2).all(|w| {
        w[1].signum() == sign && w[1].abs() > BLOWUP_RATIO * w[0].abs()
    });
    growing.then_some(sign)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_sided_quotient_of_smooth_function_converges() {
        let f = |t: f64| t.sin();
        let est = Ladder::new(1.0, 1)
            .run(|h| Ok((f(0.3 + h) - f(0.3)) / h))
            .unwrap();
        assert_eq!(est.status, Status::ConvergedFd);
        assert!((est.value - 0.3f64.cos()).abs() < 1e-6);
    }

    #[test]
    fn central_quotient_converges_fast() {
        let est = Ladder::new(1.0, 2)
            .run(|h| Ok(((1.0 + h).exp() - (1.0 - h).exp()) / (2.0 * h)))
            .unwrap();
        assert_eq!(est.status, Status::ConvergedFd);
        assert!((est.value - 1f64.exp()).abs() < 1e-8);
        assert!(est.residual <= TOL_FD * est.value.abs());
    }

    #[test]
    fn cancellation_plateaus_do_not_converge() {
        // A derivative of 3e-3 next to a value of 3e7: the quotient repeats
        // the same rounding steps long before truncation error is small.
        let f = |t: f64| 3.0e7 + 1e-3 * t * t * t + 3e-3 * t;
        let est = Ladder::new(300.0, 1)
            .run_sampled(|h| Ok(Sample::combination(&[(1.0, f(0.01 + h)), (-1.0, f(0.01))], h)))
            .unwrap();
        assert!(est.status == Status::NotConverged || (est.value - 3e-3).abs() < 1e-7, "{est:?}");
    }

    #[test]
    fn growing_quotients_are_flagged() {
        // sqrt(h)/h blows up like h^{-1/2}.
        let est = Ladder::new(1.0, 1).run(|h| Ok(h.sqrt() / h)).unwrap();
        assert_eq!(est.status, Status::NotConverged);
        assert_eq!(est.unbounded, Some(1.0));
    }
}
