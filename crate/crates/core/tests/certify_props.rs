mod common;

use std::collections::BTreeMap;

use common::{cand, catalog_metrics, certified_catalog, default_cfg};
use metricline::catalog;
use metricline::certify::hypotheses::{check_h4b, check_h4d, Check};
use metricline::certify::{certify, check_all, CheckConfig, MetricCandidate, Verdict};
use metricline::cli::to_json;
use metricline::expr::{BinOp, Expr, Var};
use metricline::grid;
use metricline::search::{brute_force_oracle, ORACLE_TOL};
use proptest::prelude::*;

/// `d(h(x), h(y))` with `h(t) = t^{2n+1}` as a fresh candidate.
fn composed(d: &MetricCandidate, n: u32) -> MetricCandidate {
    let k = Expr::Const((2 * n + 1) as f64);
    let hx = Expr::binary(BinOp::Pow, Expr::Var(Var::X), k.clone());
    let hy = Expr::binary(BinOp::Pow, Expr::Var(Var::Y), k);
    let e = d.expr.substitute_both(&hx, &hy);
    MetricCandidate::new(format!("{} o h{n}", d.label), e.to_string(), e).with_lambda(d.lambda)
}

#[test]
fn certified_catalog_entries_pass_the_oracle() {
    let cfg = default_cfg();
    let axis = grid::grid1d(&cfg);
    for d in certified_catalog() {
        let v = certify(&d, &cfg);
        assert!(v.is_certified(), "{}: {v:?}", d.label);
        let oracle = brute_force_oracle(&d, &axis, ORACLE_TOL).unwrap();
        assert!(oracle.is_empty(), "{}: {:?}", d.label, oracle.first());
    }
}

/// The config whose grids are `h⁻¹` of the default grids, so the composite
/// is sampled at the preimages of the points the plain candidate sees.
fn pulled_back_cfg(n: u32) -> CheckConfig {
    let k = (2 * n + 1) as f64;
    let mut cfg = default_cfg();
    cfg.grid_exp_min /= k;
    cfg.grid_exp_max /= k;
    cfg.grid_exp_step /= k;
    cfg.search_window = cfg.search_window.powf(1.0 / k);
    cfg
}

#[test]
fn reparametrized_metrics_stay_certified() {
    for d in certified_catalog() {
        for n in 1..=3 {
            let c = composed(&d, n);
            let v = certify(&c, &pulled_back_cfg(n));
            assert!(v.is_certified(), "{}: {}", c.label, to_json(&v));
        }
    }
}

#[test]
fn reparametrized_metrics_are_never_refuted_on_default_grid() {
    let cfg = default_cfg();
    for d in certified_catalog() {
        for n in 1..=3 {
            let c = composed(&d, n);
            let out = check_all(&c, &cfg);
            assert!(!out.verdict.is_refuted(), "{}: {}", c.label, to_json(&out.verdict));
        }
    }
}

#[test]
fn h4d_implies_h4b() {
    let cfg = default_cfg();
    let extra = vec![
        cand("abs(y-x)/(1+abs(y-x))"),
        cand("min(abs(y-x), 1)"),
        cand("abs(y-x)"),
        cand("abs(y/(1+abs(y)) - x/(1+abs(x)))"),
    ];
    for d in catalog_metrics().into_iter().chain(extra) {
        if let Check::Pass(_) = check_h4d(&d.expr, &cfg) {
            assert!(check_h4b(&d.expr, &cfg).passed(), "{}", d.label);
        }
    }
}

#[test]
fn identical_runs_serialize_identically() {
    let cfg = default_cfg();
    for d in [catalog_metrics(), vec![cand("(x-y)^2"), cand("abs(y-x)^0.5 + abs(x)")]].concat() {
        let a = check_all(&d, &cfg);
        let b = check_all(&d, &cfg);
        assert_eq!(to_json(&a.verdict), to_json(&b.verdict), "{}", d.label);
        assert_eq!(to_json(&a.necessary), to_json(&b.necessary));
        assert_eq!(to_json(&a.search), to_json(&b.search));
    }
}

#[test]
fn square_of_difference_is_refuted() {
    let v = certify(&cand("(x-y)^2"), &default_cfg());
    let Verdict::Refuted { violation, .. } = &v else {
        panic!("{v:?}");
    };
    assert!(violation.magnitude > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn random_concave_generators_certify_soundly(
        a in 0u32..4, b in 1u32..4, c in 0u32..4, e in 0u32..4,
    ) {
        prop_assume!(a + c + e > 0);
        let src = format!("{a}*x/(1+{b}*x) + {c}*sqrt(x) + {e}*log(1+x)");
        let entry = catalog::get("concave_ti", &BTreeMap::new(), Some(&src)).unwrap();
        let cfg = default_cfg();
        let v = certify(&entry.candidate, &cfg);
        prop_assert!(v.is_certified(), "{}: {}", src, to_json(&v));
        let oracle = brute_force_oracle(&entry.candidate, &grid::grid1d(&cfg), ORACLE_TOL).unwrap();
        prop_assert!(oracle.is_empty(), "{}", src);
    }
}
