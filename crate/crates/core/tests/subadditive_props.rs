mod common;

use common::{concave_pl_generator, default_cfg, linspace, peaked_generator};
use metricline::certify::{Theorem, Verdict};
use metricline::search::{brute_force_oracle, triangle_margin, ORACLE_TOL};
use metricline::subadditive::{
    breakpoint_grid, check_subadditive, classify_translation_invariant, even_extension, GeneratorFunction,
};
use proptest::prelude::*;

fn coarse_cfg() -> metricline::certify::CheckConfig {
    let mut cfg = default_cfg();
    cfg.subadditive_step = 1.0 / 60.0;
    cfg
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn concave_monotone_generators_certify(seed in any::<u64>()) {
        let g = concave_pl_generator(seed);
        let v = classify_translation_invariant(&g, &coarse_cfg()).unwrap();
        prop_assert_eq!(v.theorem(), Some(Theorem::TiMonotoneSubadditive), "{}", g.source);
        let f = even_extension(&g);
        let grid = breakpoint_grid(&f, -5.0, 5.0, 1.0 / 60.0);
        prop_assert!(check_subadditive(&f, &grid).unwrap().is_empty(), "{}", g.source);
    }

    #[test]
    fn pair_violations_are_genuine_and_transfer(seed in any::<u64>()) {
        let f = even_extension(&peaked_generator(seed));
        let grid = breakpoint_grid(&f, -5.0, 5.0, 1.0 / 60.0);
        let pairs = check_subadditive(&f, &grid).unwrap();
        prop_assert!(!pairs.is_empty(), "{}", f.source);
        let d = f.induced_metric();
        for p in pairs.iter().take(50) {
            // Recomputed from scratch, not from cached values.
            let gap = f.eval(p.x + p.y).unwrap() - f.eval(p.x).unwrap() - f.eval(p.y).unwrap();
            prop_assert!(gap > 0.0);
            prop_assert!((gap - p.gap).abs() <= 1e-12 * (1.0 + gap.abs()));
            let [a, b, c] = p.mapped_triple();
            let m = triangle_margin(&d, (a, b, c)).unwrap();
            prop_assert!(m.m_min < 0.0, "{:?} -> {:?}", p, m);
        }
    }
}

#[test]
fn peaked_generators_are_refuted_with_a_real_triangle() {
    let cfg = coarse_cfg();
    for seed in 0..16 {
        let g = peaked_generator(seed);
        let v = classify_translation_invariant(&g, &cfg).unwrap();
        let Verdict::Refuted { violation, pair } = v else {
            panic!("{}: {v:?}", g.source);
        };
        assert!(pair.is_some());
        let again = violation.reevaluate(&g.induced_metric()).unwrap();
        assert!(again > 0.0 && (again - violation.magnitude).abs() <= 1e-12 * (1.0 + again));
    }
}

#[test]
fn certified_generators_pass_the_triangle_oracle() {
    let cfg = coarse_cfg();
    let grid = linspace(-4.0, 4.0, 60);
    for seed in 0..8 {
        let g = concave_pl_generator(seed);
        assert!(classify_translation_invariant(&g, &cfg).unwrap().is_certified());
        let v = brute_force_oracle(&g.induced_metric(), &grid, ORACLE_TOL).unwrap();
        assert!(v.is_empty(), "{}: {:?}", g.source, v.first());
    }
}

#[test]
fn fixtures() {
    let exa1 = GeneratorFunction::fixture("exa1").unwrap();
    let grid = breakpoint_grid(&exa1, -5.0, 5.0, 1.0 / 300.0);
    let pairs = check_subadditive(&exa1, &grid).unwrap();
    assert!(pairs.iter().any(|p| (p.x, p.y) == (3.0, -2.0) || (p.x, p.y) == (-2.0, 3.0)));
    let exa2 = GeneratorFunction::fixture("exa2").unwrap();
    let grid = breakpoint_grid(&exa2, -5.0, 5.0, 1.0 / 300.0);
    assert!(check_subadditive(&exa2, &grid).unwrap().is_empty());
    assert!(GeneratorFunction::fixture("exa3").is_err());
}
