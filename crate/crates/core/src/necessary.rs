//! Necessary conditions on one-sided derivatives.
//!
//! Any metric whose restriction to `{x ≤ y}` is differentiable satisfies
//!
//! * `|∂₂±d(x,y)| ≤ |∂₂±d(y,y)|`,
//! * `∂₂±d(x,x) ≥ 0` and `∂₁⁺d(x,x) = ∂₂⁺d(x,x)` (symmetry),
//! * `∂₁⁻(∂₁⁺d)(x,x) ≤ ∂₁⁻(∂₁⁺d)(x,y)`.
//!
//! A witness against any of them refutes the candidate. Points where the
//! quotient ladders do not settle are skipped and counted, never guessed.
//!
//! The diagonal slope may vanish at isolated points: `|y³ − x³|` is a metric
//! with `∂₂⁺d(0,0) = 0`. It cannot vanish on a whole interval (the first
//! bound would make `d(x, ·)` locally constant), and any zero slope forces
//! `∂₂±d(x,y) = 0` along the line through it, which the first check tests.
//! Flat diagonal points are therefore listed, not reported as witnesses.
//!
//! The nested second-order operator is estimated at a single matching scale:
//! with inner and outer steps equal to `H`, the nested quotient collapses to
//! `−[d(x+H,y) − 2d(x,y) + d(x−H,y)] / H²`, which is then extrapolated like
//! any other ladder.

use rayon::prelude::*;
use serde::Serialize;

use crate::autodiff::{
    directional_with_scale, off_diagonal_scale, point_scale, DerivativeEstimate, Ladder, Sample,
};
use crate::certify::{CheckConfig, MetricCandidate};
use crate::expr::{eval_xy, Expr};
use crate::grid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirstOrderWitness {
    pub x: f64,
    pub y: f64,
    /// `"+"` or `"-"`: which one-sided partial in the second argument.
    pub side: &'static str,
    /// `|∂₂±d(x,y)|`
    pub value: f64,
    /// `|∂₂±d(y,y)|`
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagonalWitness {
    pub x: f64,
    /// `"d2+"`, `"d2-"` or `"d1+ != d2+"`.
    pub test: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondOrderWitness {
    pub x: f64,
    pub y: f64,
    /// `∂₁⁻(∂₁⁺d)(x,x)`
    pub lhs: f64,
    /// `∂₁⁻(∂₁⁺d)(x,y)`
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Contribution {
    Refuted,
    Consistent,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Skips {
    pub first_order: usize,
    pub diagonal: usize,
    pub second_order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NecessaryReport {
    pub first_order: Vec<FirstOrderWitness>,
    pub diagonal_positivity: Vec<DiagonalWitness>,
    /// Diagonal abscissae where a one-sided slope is numerically zero.
    pub flat_diagonal: Vec<f64>,
    pub second_order: Vec<SecondOrderWitness>,
    pub points_checked: usize,
    pub skipped: Skips,
    pub verdict_contribution: Contribution,
}

impl NecessaryReport {
    pub fn is_refuted(&self) -> bool {
        self.verdict_contribution == Contribution::Refuted
    }
}

/// A one-sided estimate reduced to what the comparisons need.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Reading {
    Finite(f64),
    /// Quotients diverge with this sign.
    Infinite(f64),
    Unusable,
}

fn read(est: Result<DerivativeEstimate, crate::expr::EvalError>) -> Reading {
    match est {
        Ok(e) if e.is_reliable() && e.value.is_finite() => Reading::Finite(e.value),
        Ok(e) => match e.unbounded {
            Some(s) => Reading::Infinite(s),
            None => Reading::Unusable,
        },
        Err(_) => Reading::Unusable,
    }
}

fn d2_side(e: &Expr, p: (f64, f64), sign: f64, h0: f64) -> Reading {
    read(directional_with_scale(e, p, (0.0, sign), h0))
}

const SIDES: [(&str, f64); 2] = [("+", 1.0), ("-", -1.0)];

/// Witnesses where `|∂₂±d(x,y)| > |∂₂±d(y,y)| + tol·(1 + |∂₂±d(y,y)|)`.
///
/// Returns the witnesses (largest excess first) and the number of skipped
/// comparisons.
pub fn check_first_order_bound(e: &Expr, points: &[(f64, f64)], tol: f64) -> (Vec<FirstOrderWitness>, usize) {
    let rows: Vec<(Vec<FirstOrderWitness>, usize)> = points
        .par_iter()
        .filter(|(x, y)| x != y)
        .map(|&(x, y)| {
            let mut out = Vec::new();
            let mut skipped = 0;
            for (name, s) in SIDES {
                let lhs = d2_side(e, (x, y), s, off_diagonal_scale((x, y)));
                let bound = d2_side(e, (y, y), s, point_scale((y, y)));
                match (lhs, bound) {
                    (_, Reading::Infinite(_)) => {}
                    (Reading::Finite(v), Reading::Finite(b)) => {
                        if v.abs() > b.abs() + tol * (1.0 + b.abs()) {
                            out.push(FirstOrderWitness {
                                x,
                                y,
                                side: name,
                                value: v.abs(),
                                bound: b.abs(),
                            });
                        }
                    }
                    (Reading::Infinite(_), Reading::Finite(b)) => out.push(FirstOrderWitness {
                        x,
                        y,
                        side: name,
                        value: f64::INFINITY,
                        bound: b.abs(),
                    }),
                    _ => skipped += 1,
                }
            }
            (out, skipped)
        })
        .collect();
    let skipped = rows.iter().map(|r| r.1).sum();
    let mut w: Vec<FirstOrderWitness> = rows.into_iter().flat_map(|r| r.0).collect();
    w.sort_by(|a, b| (b.value - b.bound).total_cmp(&(a.value - a.bound)));
    (w, skipped)
}

/// Outcome of the diagonal scan.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagonalScan {
    pub witnesses: Vec<DiagonalWitness>,
    /// Abscissae where a one-sided slope lies in `[−tol_nec, tol_pos]`.
    pub flat: Vec<f64>,
    pub skipped: usize,
}

/// Witnesses where a one-sided slope on the diagonal is negative (below
/// `−tol_nec`, or diverging to −∞), or where `∂₁⁺d(x,x)` and `∂₂⁺d(x,x)`
/// disagree by more than `tol_nec·(1 + |∂₂⁺d|)`.
///
/// Slopes in `[−tol_nec, tol_pos]` are numerically zero; those points are
/// listed in [`DiagonalScan::flat`].
pub fn check_diagonal_positivity(e: &Expr, xs: &[f64], tol_pos: f64, tol_nec: f64) -> DiagonalScan {
    let rows: Vec<(Vec<DiagonalWitness>, bool, usize)> = xs
        .par_iter()
        .map(|&x| {
            let h0 = point_scale((x, x));
            let mut out = Vec::new();
            let mut flat = false;
            let mut skipped = 0;
            let d2p = d2_side(e, (x, x), 1.0, h0);
            let d2m = d2_side(e, (x, x), -1.0, h0);
            let d1p = read(directional_with_scale(e, (x, x), (1.0, 0.0), h0));
            for (test, r) in [("d2+", d2p), ("d2-", d2m)] {
                match r {
                    Reading::Finite(v) if v < -tol_nec => out.push(DiagonalWitness { x, test, value: v }),
                    Reading::Finite(v) if v <= tol_pos => flat = true,
                    Reading::Infinite(s) if s < 0.0 => out.push(DiagonalWitness {
                        x,
                        test,
                        value: f64::NEG_INFINITY,
                    }),
                    Reading::Unusable => skipped += 1,
                    _ => {}
                }
            }
            match (d1p, d2p) {
                (Reading::Finite(a), Reading::Finite(b)) => {
                    if (a - b).abs() > tol_nec * (1.0 + b.abs()) {
                        out.push(DiagonalWitness {
                            x,
                            test: "d1+ != d2+",
                            value: a - b,
                        });
                    }
                }
                (Reading::Infinite(a), Reading::Infinite(b)) if a == b => {}
                (Reading::Unusable, _) | (_, Reading::Unusable) => skipped += 1,
                _ => out.push(DiagonalWitness {
                    x,
                    test: "d1+ != d2+",
                    value: f64::INFINITY,
                }),
            }
            (out, flat, skipped)
        })
        .collect();
    let mut scan = DiagonalScan::default();
    for ((w, flat, skipped), &x) in rows.into_iter().zip(xs) {
        scan.witnesses.extend(w);
        if flat {
            scan.flat.push(x);
        }
        scan.skipped += skipped;
    }
    scan
}

/// `∂₁⁻(∂₁⁺d)` at `p` from matched nested quotients.
fn nested_second(e: &Expr, p: (f64, f64)) -> Reading {
    let (x, y) = p;
    let Ok(center) = eval_xy(e, x, y) else {
        return Reading::Unusable;
    };
    read(Ladder::new(off_diagonal_scale(p), 2).run_sampled(|h| {
        let up = eval_xy(e, x + h, y)?;
        let down = eval_xy(e, x - h, y)?;
        Ok(Sample::combination(&[(-1.0, up), (2.0, center), (-1.0, down)], h * h))
    }))
}

/// Witnesses where `∂₁⁻(∂₁⁺d)(x,x) > ∂₁⁻(∂₁⁺d)(x,y) + tol·(1 + |rhs|)`.
///
/// A left-hand side diverging to −∞ satisfies the inequality; so does a
/// right-hand side diverging to +∞. When both sides diverge to −∞ the
/// comparison is skipped.
pub fn check_second_order(e: &Expr, points: &[(f64, f64)], tol: f64) -> (Vec<SecondOrderWitness>, usize) {
    let rows: Vec<(Option<SecondOrderWitness>, usize)> = points
        .par_iter()
        .filter(|(x, y)| x != y)
        .map(|&(x, y)| {
            let lhs = nested_second(e, (x, x));
            let rhs = nested_second(e, (x, y));
            let witness = |l: f64, r: f64| Some(SecondOrderWitness { x, y, lhs: l, rhs: r });
            match (lhs, rhs) {
                (Reading::Infinite(l), Reading::Infinite(r)) if l < 0.0 && r < 0.0 => (None, 1),
                (Reading::Infinite(l), _) if l < 0.0 => (None, 0),
                (_, Reading::Infinite(r)) if r > 0.0 => (None, 0),
                (Reading::Finite(l), Reading::Finite(r)) => {
                    if l > r + tol * (1.0 + r.abs()) {
                        (witness(l, r), 0)
                    } else {
                        (None, 0)
                    }
                }
                (Reading::Infinite(_), Reading::Finite(r)) => (witness(f64::INFINITY, r), 0),
                (Reading::Finite(l), Reading::Infinite(_)) => (witness(l, f64::NEG_INFINITY), 0),
                _ => (None, 1),
            }
        })
        .collect();
    let skipped = rows.iter().map(|r| r.1).sum();
    let mut w: Vec<SecondOrderWitness> = rows.into_iter().filter_map(|r| r.0).collect();
    w.sort_by(|a, b| (b.lhs - b.rhs).total_cmp(&(a.lhs - a.rhs)));
    (w, skipped)
}

/// Off-diagonal tensor grid used by the battery.
pub fn battery_points(cfg: &CheckConfig) -> Vec<(f64, f64)> {
    let axis = grid::grid1d(cfg);
    let mut out = Vec::with_capacity(axis.len() * axis.len());
    for &x in &axis {
        for &y in &axis {
            if x != y {
                out.push((x, y));
            }
        }
    }
    out
}

/// Run all three checks on the raw candidate.
pub fn run(d: &MetricCandidate, cfg: &CheckConfig) -> NecessaryReport {
    let points = battery_points(cfg);
    let xs = grid::grid1d(cfg);
    let e = &d.expr;
    let (first_order, s1) = check_first_order_bound(e, &points, cfg.tol_nec);
    let diag = check_diagonal_positivity(e, &xs, cfg.tol_pos, cfg.tol_nec);
    let diagonal_positivity = diag.witnesses;
    let (second_order, s3) = check_second_order(e, &points, cfg.tol_nec2);
    let refuted = !(first_order.is_empty() && diagonal_positivity.is_empty() && second_order.is_empty());
    NecessaryReport {
        first_order,
        diagonal_positivity,
        flat_diagonal: diag.flat,
        second_order,
        points_checked: points.len(),
        skipped: Skips {
            first_order: s1,
            diagonal: diag.skipped,
            second_order: s3,
        },
        verdict_contribution: if refuted {
            Contribution::Refuted
        } else {
            Contribution::Consistent
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_xy;

    #[test]
    fn squared_difference_first_order_witness() {
        let e = parse_xy("(x-y)^2").unwrap();
        let (w, skipped) = check_first_order_bound(&e, &[(1.0, 0.0)], 1e-5);
        assert_eq!(skipped, 0);
        assert_eq!(w.len(), 2);
        assert!((w[0].value - 2.0).abs() < 1e-9);
        assert_eq!(w[0].bound, 0.0);
    }

    #[test]
    fn abs_passes_everything() {
        let e = parse_xy("abs(y-x)").unwrap();
        let pts = [(1.0, 0.0), (-2.0, 3.0), (0.5, 0.25)];
        assert!(check_first_order_bound(&e, &pts, 1e-5).0.is_empty());
        let diag = check_diagonal_positivity(&e, &[-1.0, 0.0, 2.0], 1e-12, 1e-5);
        assert!(diag.witnesses.is_empty() && diag.flat.is_empty());
        let (w, skipped) = check_second_order(&e, &pts, 1e-3);
        assert!(w.is_empty());
        assert_eq!(skipped, 0);
    }

    #[test]
    fn squared_difference_diagonal_is_flat() {
        let e = parse_xy("(x-y)^2").unwrap();
        let diag = check_diagonal_positivity(&e, &[0.0, 1.0], 1e-12, 1e-5);
        assert!(diag.witnesses.is_empty());
        assert_eq!(diag.flat, vec![0.0, 1.0]);
    }

    #[test]
    fn cubic_reparametrization_is_flat_only_at_zero() {
        let e = parse_xy("abs(y^3-x^3)").unwrap();
        let diag = check_diagonal_positivity(&e, &[-1.0, 0.0, 2.0], 1e-12, 1e-5);
        assert!(diag.witnesses.is_empty());
        assert_eq!(diag.flat, vec![0.0]);
        let pts = [(1.0, 0.0), (-2.0, 0.0), (3.0, 1.0)];
        assert!(check_first_order_bound(&e, &pts, 1e-5).0.is_empty());
    }

    #[test]
    fn negative_slope_is_a_witness() {
        let e = parse_xy("abs(y-x) - 2*max(y-x, 0)").unwrap();
        let diag = check_diagonal_positivity(&e, &[0.0], 1e-12, 1e-5);
        assert!(diag.witnesses.iter().any(|w| w.test == "d2+" && w.value < -0.9));
    }
}
