//! Triangle-inequality margins, the exhaustive grid oracle, and a
//! derivative-free counterexample search.

use std::cmp::Ordering;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::certify::{CheckConfig, MetricCandidate};
use crate::expr::EvalError;
use crate::grid;

/// The three margins of an ordered triple `x < y < z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TripleMargin {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// `d(x,y) + d(y,z) − d(x,z)`
    pub m1: f64,
    /// `d(x,z) + d(y,z) − d(x,y)`
    pub m2: f64,
    /// `d(x,y) + d(x,z) − d(y,z)`
    pub m3: f64,
    pub m_min: f64,
}

impl TripleMargin {
    fn from_distances(x: f64, y: f64, z: f64, dxy: f64, dyz: f64, dxz: f64) -> Self {
        let m1 = dxy + dyz - dxz;
        let m2 = dxz + dyz - dxy;
        let m3 = dxy + dxz - dyz;
        TripleMargin {
            x,
            y,
            z,
            m1,
            m2,
            m3,
            m_min: m1.min(m2).min(m3),
        }
    }

    /// Index (1-based) of the smallest margin.
    pub fn worst(&self) -> u8 {
        if self.m_min == self.m1 {
            1
        } else if self.m_min == self.m2 {
            2
        } else {
            3
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarginError {
    #[error("triple must satisfy x < y < z, got ({0}, {1}, {2})")]
    Unordered(f64, f64, f64),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Margins of the three triangle inequalities at `x < y < z`.
pub fn triangle_margin(d: &MetricCandidate, t: (f64, f64, f64)) -> Result<TripleMargin, MarginError> {
    let (x, y, z) = t;
    if !(x < y && y < z) {
        return Err(MarginError::Unordered(x, y, z));
    }
    Ok(TripleMargin::from_distances(
        x,
        y,
        z,
        d.eval(x, y)?,
        d.eval(y, z)?,
        d.eval(x, z)?,
    ))
}

/// Which axiom a witness breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// Triangle inequality number 1, 2 or 3 of an ordered triple.
    Triangle(u8),
    Symmetry,
    Positivity,
    /// First-order one-sided derivative bound.
    FirstOrderBound,
    /// A one-sided slope on the diagonal is negative, or the two partials
    /// disagree there.
    DiagonalPositivity,
    /// Nested one-sided second derivative bound.
    SecondOrderBound,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationKind::Triangle(i) => write!(f, "triangle-{i}"),
            ViolationKind::Symmetry => f.write_str("symmetry"),
            ViolationKind::Positivity => f.write_str("positivity"),
            ViolationKind::FirstOrderBound => f.write_str("first-order-bound"),
            ViolationKind::DiagonalPositivity => f.write_str("diagonal-positivity"),
            ViolationKind::SecondOrderBound => f.write_str("second-order-bound"),
        }
    }
}

impl Serialize for ViolationKind {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A concrete witness that `d` is not a metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// The points involved: `[x, y]` for pair axioms, `[x, y, z]` for triangles.
    pub witness: Vec<f64>,
    pub magnitude: f64,
}

impl Violation {
    pub fn triangle(m: &TripleMargin) -> Self {
        Violation {
            kind: ViolationKind::Triangle(m.worst()),
            witness: vec![m.x, m.y, m.z],
            magnitude: -m.m_min,
        }
    }

    /// Recompute the magnitude from scratch.
    pub fn reevaluate(&self, d: &MetricCandidate) -> Result<f64, MarginError> {
        let w = &self.witness;
        match self.kind {
            ViolationKind::Triangle(_) => Ok(-triangle_margin(d, (w[0], w[1], w[2]))?.m_min),
            ViolationKind::Symmetry => Ok((d.eval(w[0], w[1])? - d.eval(w[1], w[0])?).abs()),
            ViolationKind::Positivity => {
                let v = d.eval(w[0], w[1])?;
                Ok(if w[0] == w[1] { v.abs() } else { -v })
            }
            _ => Ok(self.magnitude),
        }
    }
}

fn by_severity(a: &Violation, b: &Violation) -> Ordering {
    b.magnitude
        .total_cmp(&a.magnitude)
        .then_with(|| lexicographic(&a.witness, &b.witness))
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Default absolute-plus-relative tolerance of the oracle.
pub const ORACLE_TOL: f64 = 1e-12;

/// Exhaustive check of all triples, pairs and diagonal points of `grid`.
///
/// A triple is reported when `m_min < −tol·(1 + max d)` over its three
/// distances; symmetry when `|d(x,y) − d(y,x)| > tol·(1 + |d(x,y)|)`;
/// positivity when `|d(x,x)| > tol` or `d(x,y) ≤ 0` for `x ≠ y`.
/// The result is sorted by decreasing magnitude, then by witness.
pub fn brute_force_oracle(d: &MetricCandidate, grid: &[f64], tol: f64) -> Result<Vec<Violation>, EvalError> {
    let pts = grid::sorted_unique(grid.to_vec());
    let n = pts.len();
    let rows: Vec<Vec<f64>> = pts
        .par_iter()
        .map(|&x| pts.iter().map(|&y| d.eval(x, y)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for i in 0..n {
        let dii = rows[i][i];
        if dii.abs() > tol {
            out.push(Violation {
                kind: ViolationKind::Positivity,
                witness: vec![pts[i], pts[i]],
                magnitude: dii.abs(),
            });
        }
        for j in 0..n {
            if i == j {
                continue;
            }
            let v = rows[i][j];
            if v <= 0.0 {
                out.push(Violation {
                    kind: ViolationKind::Positivity,
                    witness: vec![pts[i], pts[j]],
                    magnitude: -v,
                });
            }
            if i < j {
                let asym = (v - rows[j][i]).abs();
                if asym > tol * (1.0 + v.abs()) {
                    out.push(Violation {
                        kind: ViolationKind::Symmetry,
                        witness: vec![pts[i], pts[j]],
                        magnitude: asym,
                    });
                }
            }
        }
    }
    let triangles: Vec<Violation> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let rows = &rows;
            let pts = &pts;
            (i + 1..n).flat_map(move |j| {
                (j + 1..n).filter_map(move |k| {
                    let (dxy, dyz, dxz) = (rows[i][j], rows[j][k], rows[i][k]);
                    let m = TripleMargin::from_distances(pts[i], pts[j], pts[k], dxy, dyz, dxz);
                    let scale = 1.0 + dxy.abs().max(dyz.abs()).max(dxz.abs());
                    (m.m_min < -tol * scale).then(|| Violation::triangle(&m))
                })
            })
        })
        .collect();
    out.extend(triangles);
    out.sort_by(by_severity);
    Ok(out)
}

/// Minimum gap kept between ordered coordinates during refinement.
pub const ORDER_GAP: f64 = 1e-6;
/// Refinement stops when the pattern step drops below this.
const MIN_STEP: f64 = 1e-9;
const MAX_MOVES: usize = 20_000;

fn margin_or_inf(d: &MetricCandidate, p: [f64; 3]) -> Option<TripleMargin> {
    triangle_margin(d, (p[0], p[1], p[2]))
        .ok()
        .filter(|m| m.m_min.is_finite())
}

/// Coordinate pattern search on `m_min`, keeping `x < y < z` and the window.
///
/// The result never has a larger `m_min` than the seed.
pub fn refine(d: &MetricCandidate, seed: TripleMargin, window: f64) -> TripleMargin {
    let mut best = seed;
    let mut p = [seed.x, seed.y, seed.z];
    let mut step = 0.25 * (p[2] - p[0]).max(1e-3);
    let mut moves = 0;
    while step >= MIN_STEP && moves < MAX_MOVES {
        let mut improved = false;
        'coords: for c in 0..3 {
            for dir in [1.0, -1.0] {
                let mut q = p;
                q[c] += dir * step;
                if q[c].abs() > window || !(q[0] + ORDER_GAP <= q[1] && q[1] + ORDER_GAP <= q[2]) {
                    continue;
                }
                if let Some(m) = margin_or_inf(d, q) {
                    if m.m_min < best.m_min {
                        best = m;
                        p = q;
                        improved = true;
                        moves += 1;
                        break 'coords;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

fn better(a: &TripleMargin, b: &TripleMargin) -> Ordering {
    a.m_min
        .total_cmp(&b.m_min)
        .then_with(|| lexicographic(&[a.x, a.y, a.z], &[b.x, b.y, b.z]))
}

/// Search for the deepest triangle violation.
///
/// Seeds are the lowest decile (by `m_min`) of all triples of the 1-D grid
/// plus seeded random triples in the search window; each seed is refined by
/// [`refine`]. Returns the deepest triple with `m_min < −1e-12·(1 + max d)`.
pub fn find_counterexample(d: &MetricCandidate, cfg: &CheckConfig) -> Result<Option<Violation>, EvalError> {
    let pts = grid::grid1d(cfg);
    let n = pts.len();
    let rows: Vec<Vec<f64>> = pts
        .par_iter()
        .map(|&x| pts.iter().map(|&y| d.eval(x, y)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<_, _>>()?;
    let mut seeds = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                seeds.push(TripleMargin::from_distances(
                    pts[i], pts[j], pts[k], rows[i][j], rows[j][k], rows[i][k],
                ));
            }
        }
    }
    let w = cfg.search_window;
    seeds.retain(|m| m.x.abs() <= w && m.z.abs() <= w);
    seeds.sort_by(better);
    seeds.truncate(seeds.len().div_ceil(10).max(1));

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed.wrapping_add(0x5eed));
    let hi = cfg.search_window.log10();
    let mut added = 0;
    let mut attempts = 0;
    while added < cfg.search_random_seeds && attempts < 100 * cfg.search_random_seeds.max(1) {
        attempts += 1;
        let mut t = [0.0; 3];
        for v in &mut t {
            *v = grid::random_log_symmetric(&mut rng, cfg.grid_exp_min, hi);
        }
        t.sort_by(f64::total_cmp);
        if t[0] + ORDER_GAP > t[1] || t[1] + ORDER_GAP > t[2] {
            continue;
        }
        if let Some(m) = margin_or_inf(d, t) {
            seeds.push(m);
            added += 1;
        }
    }

    let refined: Vec<TripleMargin> = seeds
        .par_iter()
        .map(|s| refine(d, *s, cfg.search_window))
        .collect();
    let Some(deepest) = refined.into_iter().min_by(better) else {
        return Ok(None);
    };
    let dists = [
        d.eval(deepest.x, deepest.y)?,
        d.eval(deepest.y, deepest.z)?,
        d.eval(deepest.x, deepest.z)?,
    ];
    let scale = 1.0 + dists.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok((deepest.m_min < -ORACLE_TOL * scale).then(|| Violation::triangle(&deepest)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(src: &str) -> MetricCandidate {
        MetricCandidate::parse("t", src).unwrap()
    }

    #[test]
    fn abs_margins_nonnegative() {
        let m = triangle_margin(&cand("abs(y-x)"), (-1.0, 0.5, 2.0)).unwrap();
        assert_eq!(m.m1, 0.0);
        assert!(m.m2 > 0.0 && m.m3 > 0.0);
    }

    #[test]
    fn unordered_triples_rejected() {
        assert!(matches!(
            triangle_margin(&cand("abs(y-x)"), (1.0, 0.0, 2.0)),
            Err(MarginError::Unordered(..))
        ));
    }

    #[test]
    fn squared_difference_oracle_witness() {
        let v = brute_force_oracle(&cand("(x-y)^2"), &[0.0, 0.5, 1.0], ORACLE_TOL).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::Triangle(1));
        assert_eq!(v[0].witness, vec![0.0, 0.5, 1.0]);
        assert_eq!(v[0].magnitude, 0.5);
    }

    #[test]
    fn asymmetry_and_sign_are_reported() {
        let v = brute_force_oracle(&cand("x - y"), &[0.0, 1.0], ORACLE_TOL).unwrap();
        assert!(v.iter().any(|w| w.kind == ViolationKind::Symmetry));
        assert!(v.iter().any(|w| w.kind == ViolationKind::Positivity && w.witness == vec![0.0, 1.0]));
    }

    #[test]
    fn refinement_never_worsens() {
        let d = cand("(x-y)^2");
        let seed = triangle_margin(&d, (0.0, 0.4, 1.0)).unwrap();
        let r = refine(&d, seed, 10.0);
        assert!(r.m_min <= seed.m_min);
    }
}
