#![allow(dead_code)]

use std::collections::BTreeMap;

use metricline::catalog::{self, CatalogEntry};
use metricline::certify::{CheckConfig, MetricCandidate};
use metricline::expr::parse_xy;
use metricline::subadditive::{Domain, GeneratorFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn cand(src: &str) -> MetricCandidate {
    MetricCandidate::new(src, src, parse_xy(src).unwrap())
}

/// Every catalog entry with default or representative parameters; all are metrics.
pub fn catalog_metrics() -> Vec<MetricCandidate> {
    let none = BTreeMap::new();
    let mut out = Vec::new();
    for (name, params) in [
        ("chordal", vec![]),
        ("generalized_chordal", vec![]),
        ("generalized_chordal", vec![("p", 3.0)]),
        ("generalized_chordal", vec![("alpha", 16.0), ("p", 2.0)]),
        ("p_relative", vec![("p", 1.0)]),
        ("p_relative", vec![("p", 2.0)]),
        ("p_relative", vec![("p", 3.0)]),
        ("relative", vec![]),
    ] {
        out.push(catalog::get_with(name, &params).unwrap().candidate);
    }
    for g in ["sqrt(x)", "x/(1+x)", "log(1+x)"] {
        out.push(catalog::get("concave_ti", &none, Some(g)).unwrap().candidate);
    }
    out
}

/// Catalog entries that the pipeline certifies.
pub fn certified_catalog() -> Vec<MetricCandidate> {
    catalog_metrics()
        .into_iter()
        .filter(|d| !(d.label.starts_with("p_relative(p=2") || d.label.starts_with("p_relative(p=3")))
        .filter(|d| d.label != "relative")
        .collect()
}

/// Random concave non-decreasing piecewise-linear generator on `[0, ∞)`.
///
/// Breakpoints are multiples of 1/12 and slopes decrease to a non-negative
/// final slope.
pub fn concave_pl_generator(seed: u64) -> GeneratorFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pieces = rng.random_range(1..=4);
    let mut slope = rng.random_range(1..=24) as f64 / 8.0;
    let mut t = 0.0;
    let mut value = 0.0;
    let mut src = String::from("pw(");
    for _ in 0..pieces {
        let next = t + rng.random_range(1..=24) as f64 / 12.0;
        src += &format!("x < {next}, {value} + {slope}*(x - {t}), ");
        value += slope * (next - t);
        t = next;
        slope *= rng.random_range(0..8) as f64 / 8.0;
    }
    src += &format!("{value} + {slope}*(x - {t}))");
    GeneratorFunction::parse(&src, Domain::HalfLine).unwrap()
}

/// Random generator rising to a peak and dropping to a plateau below half
/// the peak, so its even extension is not subadditive.
pub fn peaked_generator(seed: u64) -> GeneratorFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = rng.random_range(3..=12) as f64 / 6.0;
    let s = rng.random_range(3..=12) as f64 / 6.0;
    let peak = s * a;
    let plateau = peak * rng.random_range(1..=5) as f64 / 12.0;
    let b = a + rng.random_range(1..=6) as f64 / 6.0;
    let fall = (peak - plateau) / (b - a);
    let src = format!("pw(x < {a}, {s}*x, x < {b}, {peak} - {fall}*(x - {a}), {plateau})");
    GeneratorFunction::parse(&src, Domain::HalfLine).unwrap()
}

/// A grid of `n` points evenly spaced over `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

pub fn default_cfg() -> CheckConfig {
    CheckConfig::default()
}

/// Radical inverse of `i` in `base`.
pub fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    out
}

/// `n` Halton points in `[-50, 50]²` at relative distance above 1e-3 from
/// the diagonal and from the entry's non-smooth set.
pub fn halton_off_singular(entry: &CatalogEntry, n: usize) -> Vec<(f64, f64)> {
    let lambda = entry.candidate.lambda;
    (1..)
        .map(|i| (100.0 * radical_inverse(i, 2) - 50.0, 100.0 * radical_inverse(i, 3) - 50.0))
        .filter(|&(x, y)| {
            let band = 1e-3 * (1.0 + x.abs() + y.abs());
            (x - y).abs() > band && lambda.distance(x, y) > band
        })
        .take(n)
        .collect()
}
