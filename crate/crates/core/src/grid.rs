//! Sample sets shared by the checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::certify::CheckConfig;

/// Sorted signed log-spaced values `{0} ∪ {±10^t}` from the config exponents.
pub fn grid1d(cfg: &CheckConfig) -> Vec<f64> {
    // Never step past `grid_exp_max`; the slack absorbs rounding in the ratio.
    let count = ((cfg.grid_exp_max - cfg.grid_exp_min) / cfg.grid_exp_step + 1e-9).floor() as i64;
    let mut out = vec![0.0];
    for i in 0..=count {
        let m = 10f64.powf(cfg.grid_exp_min + i as f64 * cfg.grid_exp_step);
        out.push(m);
        out.push(-m);
    }
    out.sort_by(f64::total_cmp);
    out
}

/// `n` points, half of each sign, log-spaced in `[10^lo, 10^hi]`, plus 0 when `n` is odd.
pub fn log_symmetric(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let half = n / 2;
    let mut out = Vec::with_capacity(n);
    for i in 0..half {
        let t = if half > 1 {
            lo + (hi - lo) * i as f64 / (half - 1) as f64
        } else {
            lo
        };
        let m = 10f64.powf(t);
        out.push(m);
        out.push(-m);
    }
    if n % 2 == 1 {
        out.push(0.0);
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Tensor product of [`grid1d`] with itself plus seeded log-symmetric random points.
pub fn grid2d(cfg: &CheckConfig) -> Vec<(f64, f64)> {
    let axis = grid1d(cfg);
    let mut out = Vec::with_capacity(axis.len() * axis.len() + cfg.random_points);
    for &x in &axis {
        for &y in &axis {
            out.push((x, y));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    for _ in 0..cfg.random_points {
        let x = random_log_symmetric(&mut rng, cfg.grid_exp_min, cfg.grid_exp_max);
        let y = random_log_symmetric(&mut rng, cfg.grid_exp_min, cfg.grid_exp_max);
        out.push((x, y));
    }
    out
}

/// A value `±10^t` with `t` uniform in `[lo, hi]` and a fair sign.
pub fn random_log_symmetric<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let t: f64 = rng.random_range(lo..=hi);
    let m = 10f64.powf(t);
    if rng.random_bool(0.5) {
        m
    } else {
        -m
    }
}

/// Uniform points `k·step` covering `[lo, hi]`.
///
/// When `1/step` is an integer `q`, points are computed as `k/q` so that
/// rational breakpoints such as `5/3` are hit exactly.
pub fn uniform(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let inv = 1.0 / step;
    let q = inv.round();
    let exact = (inv - q).abs() < 1e-9 * q;
    let k_lo = (lo / step - 1e-9).ceil() as i64;
    let k_hi = (hi / step + 1e-9).floor() as i64;
    (k_lo..=k_hi)
        .map(|k| if exact { k as f64 / q } else { k as f64 * step })
        .collect()
}

/// Half-width of the exclusion band at `(x, y)`: `rel · (1 + |x| + |y|)`.
pub fn band(rel: f64, x: f64, y: f64) -> f64 {
    rel * (1.0 + x.abs() + y.abs())
}

/// Sort and remove exact duplicates.
pub fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}
