//! Choosing `h(x) = x^{2n+1}` so that `d(h(x), h(y))` is smooth across Λ.

use super::candidate::{LambdaSet, MetricCandidate, Reparametrization};
use crate::autodiff::hessian_unguarded;
use crate::expr::Expr;

const EPSILONS: [f64; 3] = [1e-2, 1e-3, 1e-4];
const TRANSVERSE: [f64; 5] = [0.37, -0.61, 1.3, -2.2, 3.7];
const BLOWUP_FACTOR: f64 = 100.0;
const ABS_FLOOR: f64 = 1e-8;

/// Shape of Λ suggested by where kink nodes switched.
///
/// `None` when some kink lies neither on an axis nor on `x + y = 0`.
pub fn infer_lambda(kinks: &[(f64, f64)]) -> Option<LambdaSet> {
    let tiny = |v: f64, s: f64| v.abs() <= 1e-12 * (1.0 + s);
    let mut anti = false;
    for &(x, y) in kinks {
        let s = x.abs() + y.abs();
        if tiny(x, s) || tiny(y, s) {
            continue;
        }
        if tiny(x + y, s) {
            anti = true;
            continue;
        }
        return None;
    }
    Some(match (kinks.is_empty(), anti) {
        (true, _) => LambdaSet::Empty,
        (false, false) => LambdaSet::Axes,
        (false, true) => LambdaSet::AxesAndAntiDiagonal,
    })
}

/// Pairs of points on either side of Λ at distance `eps` across it.
fn crossing_pairs(lambda: LambdaSet, eps: f64) -> Vec<((f64, f64), (f64, f64))> {
    let mut out = Vec::new();
    if lambda.is_empty() {
        return out;
    }
    for &t in &TRANSVERSE {
        out.push(((eps, t), (-eps, t)));
        out.push(((t, eps), (t, -eps)));
    }
    if lambda == LambdaSet::AxesAndAntiDiagonal {
        for &t in &TRANSVERSE {
            out.push(((t + eps, -t + eps), (t - eps, -t - eps)));
        }
    }
    out
}

/// Largest jump of first and second partials across Λ at offset `eps`,
/// together with the largest partial seen; `None` when a partial is unusable.
fn jump(e: &Expr, lambda: LambdaSet, eps: f64) -> Option<(f64, f64)> {
    let mut j = 0.0f64;
    let mut m = 0.0f64;
    for (p, q) in crossing_pairs(lambda, eps) {
        let (hp, hq) = (hessian_unguarded(e, p)?, hessian_unguarded(e, q)?);
        for (a, b) in hp.entries().iter().zip(hq.entries()) {
            j = j.max((a - b).abs());
            m = m.max(a.abs()).max(b.abs());
        }
    }
    Some((j, m))
}

/// Whether the partials up to second order of `e` look continuous across Λ:
/// the jump shrinks as the crossing offset does and nothing blows up.
pub fn smooth_across(e: &Expr, lambda: LambdaSet) -> bool {
    let mut rows = Vec::with_capacity(EPSILONS.len());
    for eps in EPSILONS {
        match jump(e, lambda, eps) {
            Some(r) => rows.push(r),
            None => return false,
        }
    }
    let (j_far, m_far) = rows[0];
    let (j_near, m_near) = rows[rows.len() - 1];
    let blows_up = m_near > BLOWUP_FACTOR * (1.0 + m_far);
    !blows_up && j_near <= (0.5 * j_far).max(ABS_FLOOR * (1.0 + m_near))
}

/// Smallest `n ≤ max_n` making `d ∘ (h × h)` smooth across the candidate's Λ.
pub fn choose_reparametrization(d: &MetricCandidate, max_n: u32) -> Option<Reparametrization> {
    if d.lambda.is_empty() {
        return None;
    }
    (0..=max_n).find_map(|n| {
        let r = Reparametrization {
            n,
            rationale: String::new(),
        };
        let composed = d.reparametrized(r);
        smooth_across(composed.effective(), d.lambda).then(|| Reparametrization {
            n,
            rationale: if n == 0 {
                format!("second partials already continuous across {}", d.lambda.describe())
            } else {
                format!(
                    "smallest n whose composite with x^{} has continuous second partials across {}",
                    2 * n + 1,
                    d.lambda.describe()
                )
            },
        })
    })
}
