mod common;

use common::{cand, catalog_metrics, default_cfg, linspace};
use metricline::grid;
use metricline::search::{brute_force_oracle, find_counterexample, refine, triangle_margin, ORACLE_TOL};
use proptest::prelude::*;

const NON_METRICS: [&str; 4] = [
    "(x-y)^2",
    "abs(x-y)^1.5",
    "sqrt(abs(y-x)) + 0.3*(x-y)^2",
    "min((x-y)^2, abs(x-y))",
];

fn ordered_triple() -> impl Strategy<Value = (f64, f64, f64)> {
    (-5.0f64..5.0, 0.01f64..3.0, 0.01f64..3.0).prop_map(|(x, a, b)| (x, x + a, x + a + b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn refinement_never_worsens(t in ordered_triple(), which in 0usize..NON_METRICS.len()) {
        let d = cand(NON_METRICS[which]);
        let seed = triangle_margin(&d, t).unwrap();
        let out = refine(&d, seed, 10.0);
        prop_assert!(out.m_min <= seed.m_min);
        prop_assert!(out.x < out.y && out.y < out.z);
        prop_assert!(out.x.abs() <= 10.0 && out.z.abs() <= 10.0);
    }
}

#[test]
fn witnesses_reevaluate_to_their_magnitude() {
    let cfg = default_cfg();
    for src in NON_METRICS {
        let d = cand(src);
        let v = find_counterexample(&d, &cfg).unwrap().unwrap_or_else(|| panic!("{src}: no witness"));
        let again = v.reevaluate(&d).unwrap();
        assert!((again - v.magnitude).abs() <= 1e-12 * (1.0 + v.magnitude.abs()), "{src}");
        assert!(v.magnitude > 0.0);
        let w = &v.witness;
        assert!(w[0] < w[1] && w[1] < w[2], "{src}: {w:?}");
    }
}

#[test]
fn no_search_witness_means_clean_oracle() {
    let cfg = default_cfg();
    let axis = grid::grid1d(&cfg);
    for d in catalog_metrics() {
        let found = find_counterexample(&d, &cfg).unwrap();
        assert!(found.is_none(), "{}: {found:?}", d.label);
        let oracle = brute_force_oracle(&d, &axis, ORACLE_TOL).unwrap();
        assert!(oracle.is_empty(), "{}: {:?}", d.label, oracle.first());
    }
}

#[test]
fn oracle_triangle_on_three_points() {
    let d = cand("(x-y)^2");
    let v = brute_force_oracle(&d, &[0.0, 0.5, 1.0], ORACLE_TOL).unwrap();
    let tri = v.iter().find(|v| v.witness == vec![0.0, 0.5, 1.0]).unwrap();
    assert_eq!(tri.magnitude, 0.5);
}

#[test]
fn search_agrees_with_fine_oracle_on_small_window() {
    let mut cfg = default_cfg();
    cfg.grid_exp_max = 2f64.log10();
    cfg.search_window = 2.0;
    let d = cand("sqrt(abs(y-x)) + 0.3*(x-y)^2");
    let oracle = brute_force_oracle(&d, &linspace(-2.0, 2.0, 200), ORACLE_TOL).unwrap();
    let search = find_counterexample(&d, &cfg).unwrap();
    assert_eq!(oracle.is_empty(), search.is_none(), "{search:?} vs {:?}", oracle.first());
    if let (Some(s), Some(o)) = (search, oracle.first()) {
        // Refinement reaches at least the depth of the best grid triple.
        assert!(s.magnitude >= o.magnitude * (1.0 - 1e-9), "{} < {}", s.magnitude, o.magnitude);
        assert!(s.witness.iter().all(|c| c.abs() <= 2.0));
    }
}
