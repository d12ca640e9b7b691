//! Built-in metric candidates with closed-form cross partials.
//!
//! Each entry is written in the expression DSL so it goes through exactly
//! the same evaluation and differentiation code as user input; the closed
//! forms below are independent transcriptions used as oracles.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::autodiff::HyperDual;
use crate::certify::{LambdaSet, MetricCandidate};
use crate::expr::{eval, eval_x, parse_x, EvalEnv, EvalError, Expr, ParseError, UnaryFn, Var};

/// Names accepted by [`get`], in listing order.
pub const NAMES: [&str; 5] = [
    "concave_ti",
    "p_relative",
    "relative",
    "chordal",
    "generalized_chordal",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("unknown catalog entry `{0}`")]
    UnknownName(String),
    #[error("entry `{entry}` has no parameter `{param}`")]
    UnknownParam { entry: String, param: String },
    #[error("invalid parameter {param} = {value}: {reason}")]
    InvalidParam {
        param: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("`concave_ti` needs a generator expression in x")]
    MissingGenerator,
    #[error("generator: {0}")]
    Generator(#[from] ParseError),
    #[error("generator is not concave near u = {at}")]
    NotConcave { at: f64 },
    #[error("generator does not vanish at 0 (g(0) = {0})")]
    NonZeroAtOrigin(f64),
    #[error("generator is not positive at u = {0}")]
    NotPositive(f64),
    #[error("generator cannot be evaluated: {0}")]
    Eval(#[from] EvalError),
    #[error("({0}, {1}) lies on the diagonal or the non-smooth set")]
    ExcludedPoint(f64, f64),
    #[error("entry `{0}` has no printed closed-form cross partial")]
    NoClosedForm(&'static str),
}

/// Parameter schema of an entry: `(name, default, constraint)`.
pub fn param_schema(name: &str) -> Result<&'static [(&'static str, f64, &'static str)], CatalogError> {
    Ok(match name {
        "concave_ti" | "relative" | "chordal" => &[],
        "p_relative" => &[("p", 1.0, "p >= 1")],
        "generalized_chordal" => &[
            ("alpha", 1.0, "alpha > 0"),
            ("beta", 1.0, "beta >= 0"),
            ("p", 2.0, "p >= 1"),
        ],
        other => return Err(CatalogError::UnknownName(other.to_string())),
    })
}

/// Which sufficiency result is expected to certify the entry.
pub fn expected_theorem(name: &str) -> Result<&'static str, CatalogError> {
    Ok(match name {
        "concave_ti" => "T-H4A",
        "p_relative" => {
            "p = 1: T-combined(n=1,H4A); p > 1: none, the cross partial is negative where x·y < 0"
        }
        "relative" => "none: limit of p_relative; the kink on x + y = 0 survives reparametrization",
        "chordal" => "T-H4D",
        "generalized_chordal" => "T-combined, H4D",
        other => return Err(CatalogError::UnknownName(other.to_string())),
    })
}

/// DSL formula of an entry with symbolic parameters.
pub fn formula(name: &str) -> Result<&'static str, CatalogError> {
    Ok(match name {
        "concave_ti" => "g(abs(y-x))",
        "p_relative" => "pw(abs(x)+abs(y)==0, 0, abs(y-x)/(abs(x)^p+abs(y)^p)^(1/p))",
        "relative" => "pw(abs(x)+abs(y)==0, 0, abs(y-x)/max(abs(x),abs(y)))",
        "chordal" => "2*abs(y-x)/(sqrt(1+x^2)*sqrt(1+y^2))",
        "generalized_chordal" => {
            "abs(y-x)/((alpha+beta*abs(x)^p)^(1/p)*(alpha+beta*abs(y)^p)^(1/p))"
        }
        other => return Err(CatalogError::UnknownName(other.to_string())),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub params: BTreeMap<String, f64>,
    /// One-variable generator `g` for `concave_ti`.
    pub generator: Option<Expr>,
    pub candidate: MetricCandidate,
    pub expected_theorem: &'static str,
}

impl CatalogEntry {
    pub fn param(&self, key: &str) -> f64 {
        self.params[key]
    }

    pub fn nonsmooth_set(&self) -> LambdaSet {
        self.candidate.lambda
    }
}

fn resolve_params(
    name: &'static str,
    given: &BTreeMap<String, f64>,
) -> Result<BTreeMap<String, f64>, CatalogError> {
    let schema = param_schema(name)?;
    for k in given.keys() {
        if !schema.iter().any(|(n, _, _)| n == k) {
            return Err(CatalogError::UnknownParam {
                entry: name.to_string(),
                param: k.clone(),
            });
        }
    }
    let mut out = BTreeMap::new();
    for (n, default, _) in schema {
        out.insert(n.to_string(), given.get(*n).copied().unwrap_or(*default));
    }
    if let Some(&p) = out.get("p") {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(CatalogError::InvalidParam {
                param: "p",
                value: p,
                reason: "p must be a finite number >= 1",
            });
        }
    }
    if let Some(&a) = out.get("alpha") {
        if !(a > 0.0 && a.is_finite()) {
            return Err(CatalogError::InvalidParam {
                param: "alpha",
                value: a,
                reason: "alpha must be > 0",
            });
        }
    }
    if let Some(&b) = out.get("beta") {
        if !(b >= 0.0 && b.is_finite()) {
            return Err(CatalogError::InvalidParam {
                param: "beta",
                value: b,
                reason: "beta must be >= 0",
            });
        }
    }
    Ok(out)
}

fn lit(v: f64) -> String {
    format!("{v:?}")
}

fn parse_dsl(source: &str) -> Expr {
    crate::expr::parse_xy(source).expect("catalog formulas are well formed")
}

/// Look up an entry.
///
/// `generator` is required for `concave_ti` and ignored otherwise.
pub fn get(
    name: &str,
    params: &BTreeMap<String, f64>,
    generator: Option<&str>,
) -> Result<CatalogEntry, CatalogError> {
    let name: &'static str = NAMES
        .iter()
        .copied()
        .find(|n| *n == name)
        .ok_or_else(|| CatalogError::UnknownName(name.to_string()))?;
    let params = resolve_params(name, params)?;
    let mut gen_expr = None;
    let (source, lambda) = match name {
        "chordal" => (formula(name)?.to_string(), LambdaSet::Empty),
        "relative" => (formula(name)?.to_string(), LambdaSet::AxesAndAntiDiagonal),
        "p_relative" => {
            let p = lit(params["p"]);
            (
                format!("pw(abs(x)+abs(y)==0, 0, abs(y-x)/(abs(x)^{p}+abs(y)^{p})^(1/{p}))"),
                LambdaSet::Axes,
            )
        }
        "generalized_chordal" => {
            let (a, b, p) = (lit(params["alpha"]), lit(params["beta"]), lit(params["p"]));
            (
                format!(
                    "abs(y-x)/(({a}+{b}*abs(x)^{p})^(1/{p})*({a}+{b}*abs(y)^{p})^(1/{p}))"
                ),
                LambdaSet::Axes,
            )
        }
        "concave_ti" => {
            let src = generator.ok_or(CatalogError::MissingGenerator)?;
            let g = parse_x(src)?;
            validate_concave_generator(&g)?;
            let gap = Expr::unary(
                UnaryFn::Abs,
                Expr::binary(crate::expr::BinOp::Sub, Expr::Var(Var::Y), Expr::Var(Var::X)),
            );
            let d = g.substitute(Var::X, &gap);
            gen_expr = Some(g);
            (d.to_string(), LambdaSet::Empty)
        }
        _ => unreachable!("name checked above"),
    };
    let expr = parse_dsl(&source);
    let label = if params.is_empty() {
        name.to_string()
    } else {
        let ps: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{name}({})", ps.join(","))
    };
    Ok(CatalogEntry {
        name,
        params,
        generator: gen_expr,
        candidate: MetricCandidate::new(label, source, expr).with_lambda(lambda),
        expected_theorem: expected_theorem(name)?,
    })
}

/// Convenience wrapper taking `(key, value)` pairs.
pub fn get_with(name: &str, params: &[(&str, f64)]) -> Result<CatalogEntry, CatalogError> {
    let map = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    get(name, &map, None)
}

/// Check `g(0) = 0`, positivity and midpoint concavity on `(0, 1000]`.
pub fn validate_concave_generator(g: &Expr) -> Result<(), CatalogError> {
    let g0 = eval_x(g, 0.0)?;
    if g0.abs() > 1e-12 {
        return Err(CatalogError::NonZeroAtOrigin(g0));
    }
    let probes = crate::grid::log_symmetric(81, -3.0, 3.0);
    for &u in probes.iter().filter(|u| **u > 0.0) {
        let gu = eval_x(g, u)?;
        if gu <= 0.0 {
            return Err(CatalogError::NotPositive(u));
        }
        for frac in [0.5, 0.125, 1.0 / 64.0] {
            let h = u * frac;
            let bend = eval_x(g, u - h)? + eval_x(g, u + h)? - 2.0 * gu;
            if bend > 1e-9 * (1.0 + gu.abs()) {
                return Err(CatalogError::NotConcave { at: u });
            }
        }
    }
    Ok(())
}

fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Closed-form cross partial of the generalized chordal reduced form `d_g`
/// at `(u, v)`, valid off the diagonal and the axes.
pub fn reduced_chordal_cross_partial(p: f64, u: f64, v: f64) -> f64 {
    let num = sgn(v) * v.abs().powf(p - 1.0) - sgn(u) * u.abs().powf(p - 1.0);
    let e = (p + 1.0) / p;
    let den = (1.0 + u.abs().powf(p)).powf(e) * (1.0 + v.abs().powf(p)).powf(e);
    sgn(v - u) * num / den
}

/// Textbook closed form of the p-relative cross partial, written for the
/// ordered pair `a > b`.
///
/// It equals the true `∂₁₂ d` when both coordinates are positive. In the
/// other regions it does not: for `0 > a > b` and for `a > 0 > b` the true
/// value differs (for `p > 1` it is negative at `(1, −1/2)`), so this is an
/// oracle for the positive quadrant only.
pub fn p_relative_cross_partial(p: f64, x: f64, y: f64) -> f64 {
    let (a, b) = if x > y { (x, y) } else { (y, x) };
    let s = a.abs().powf(p) + b.abs().powf(p);
    let den = s.powf(2.0 + 1.0 / p);
    let first = (sgn(a) * a.abs().powf(2.0 * p - 1.0) - sgn(b) * b.abs().powf(2.0 * p - 1.0)) / den;
    let second = p * sgn(a * b) * (a.abs() - b.abs()) / den * (a * b).abs().powf(p - 1.0);
    first + second
}

/// Cross partial of the chordal metric.
pub fn chordal_cross_partial(x: f64, y: f64) -> f64 {
    2.0 * (x - y).abs() / ((1.0 + x * x).powf(1.5) * (1.0 + y * y).powf(1.5))
}

/// Second derivative of a one-variable generator via hyper-duals.
fn generator_second_derivative(g: &Expr, u: f64) -> Result<f64, EvalError> {
    let env = EvalEnv::x(HyperDual::seed_both(u));
    Ok(eval(g, &env)?.dxy)
}

/// The closed-form `∂₁₂ d` of an entry at a point off `Δ ∪ Λ`.
///
/// For `p_relative` this is [`p_relative_cross_partial`], exact only when
/// `x, y > 0`.
pub fn closed_form_cross_partial(entry: &CatalogEntry, point: (f64, f64)) -> Result<f64, CatalogError> {
    let (x, y) = point;
    if x == y || entry.candidate.lambda.distance(x, y) == 0.0 {
        return Err(CatalogError::ExcludedPoint(x, y));
    }
    match entry.name {
        "chordal" => Ok(chordal_cross_partial(x, y)),
        "p_relative" => Ok(p_relative_cross_partial(entry.param("p"), x, y)),
        "generalized_chordal" => {
            let r = reduce_generalized_chordal(entry.param("alpha"), entry.param("beta"), entry.param("p"))?;
            if r.degenerate {
                return Ok(0.0);
            }
            Ok(r.scaling * r.c * r.c * reduced_chordal_cross_partial(entry.param("p"), r.c * x, r.c * y))
        }
        "concave_ti" => {
            let g = entry.generator.as_ref().ok_or(CatalogError::MissingGenerator)?;
            Ok(-generator_second_derivative(g, (y - x).abs())?)
        }
        _ => Err(CatalogError::NoClosedForm(entry.name)),
    }
}

/// Linear change of variables reducing the generalized chordal metric.
///
/// `d(x, y) = scaling · d_g(c·x, c·y)` with `c = (β/α)^{1/p}` and
/// `d_g(x, y) = |y − x| / ((1 + |x|^p)^{1/p} (1 + |y|^p)^{1/p})`.
/// With `β = 0` the metric is `|y − x| / α^{2/p}`; `degenerate` is set and
/// `reduced` is `|y − x|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChordalReduction {
    pub scaling: f64,
    pub c: f64,
    pub reduced: MetricCandidate,
    pub degenerate: bool,
}

pub fn reduce_generalized_chordal(alpha: f64, beta: f64, p: f64) -> Result<ChordalReduction, CatalogError> {
    let mut params = BTreeMap::new();
    params.insert("alpha".to_string(), alpha);
    params.insert("beta".to_string(), beta);
    params.insert("p".to_string(), p);
    resolve_params("generalized_chordal", &params)?;
    if beta == 0.0 {
        let source = "abs(y-x)";
        return Ok(ChordalReduction {
            scaling: 1.0 / alpha.powf(2.0 / p),
            c: 1.0,
            reduced: MetricCandidate::new("translation-invariant reduction", source, parse_dsl(source)),
            degenerate: true,
        });
    }
    let pl = lit(p);
    let source = format!("abs(y-x)/((1+abs(x)^{pl})^(1/{pl})*(1+abs(y)^{pl})^(1/{pl}))");
    Ok(ChordalReduction {
        scaling: 1.0 / (alpha.powf(1.0 / p) * beta.powf(1.0 / p)),
        c: (beta / alpha).powf(1.0 / p),
        reduced: MetricCandidate::new("reduced generalized chordal", source.clone(), parse_dsl(&source))
            .with_lambda(LambdaSet::Axes),
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spot_values() {
        let ch = get_with("chordal", &[]).unwrap();
        assert!((ch.candidate.eval(0.0, 1.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let rel = get_with("relative", &[]).unwrap();
        assert_eq!(rel.candidate.eval(1.0, 2.0).unwrap(), 0.5);
        let pr = get_with("p_relative", &[("p", 1.0)]).unwrap();
        assert_eq!(pr.candidate.eval(0.0, 0.0).unwrap(), 0.0);
        assert!((pr.candidate.eval(1.0, 2.0).unwrap() - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn parameter_validation() {
        assert!(matches!(
            get_with("p_relative", &[("p", 0.5)]),
            Err(CatalogError::InvalidParam { param: "p", .. })
        ));
        assert!(matches!(
            get_with("generalized_chordal", &[("alpha", 0.0)]),
            Err(CatalogError::InvalidParam { param: "alpha", .. })
        ));
        assert!(matches!(
            get_with("generalized_chordal", &[("beta", -1.0)]),
            Err(CatalogError::InvalidParam { param: "beta", .. })
        ));
        assert!(matches!(
            get_with("chordal", &[("p", 2.0)]),
            Err(CatalogError::UnknownParam { .. })
        ));
        assert!(matches!(get_with("nope", &[]), Err(CatalogError::UnknownName(_))));
        assert!(matches!(get_with("concave_ti", &[]), Err(CatalogError::MissingGenerator)));
    }

    #[test]
    fn concave_generator_checks() {
        let ok = get("concave_ti", &BTreeMap::new(), Some("sqrt(x)")).unwrap();
        assert_eq!(ok.candidate.source, "sqrt(abs(y - x))");
        let err = get("concave_ti", &BTreeMap::new(), Some("x^2")).unwrap_err();
        assert!(matches!(err, CatalogError::NotConcave { .. }));
        let err = get("concave_ti", &BTreeMap::new(), Some("1 + x")).unwrap_err();
        assert!(matches!(err, CatalogError::NonZeroAtOrigin(_)));
    }

    #[test]
    fn reduced_chordal_value_at_one_two() {
        // (sgn(2)·2 − sgn(1)·1) / ((1+1)^{3/2} (1+4)^{3/2})
        let want = 1.0 / (2f64.powf(1.5) * 5f64.powf(1.5));
        assert!((reduced_chordal_cross_partial(2.0, 1.0, 2.0) - want).abs() < 1e-16);
        assert!((want - 0.031_622_776_601_683_79).abs() < 1e-15);
    }

    #[test]
    fn p_relative_closed_form_p1() {
        // Direct differentiation of (x - y)/(x + y) for x > y > 0 gives 2(x - y)/(x + y)^3.
        let want = 2.0 * (2.0 - 1.0) / 27.0;
        assert!((p_relative_cross_partial(1.0, 2.0, 1.0) - want).abs() < 1e-15);
        assert_eq!(p_relative_cross_partial(1.0, 2.0, 1.0), p_relative_cross_partial(1.0, 1.0, 2.0));
    }

    #[test]
    fn excluded_points_rejected() {
        let pr = get_with("p_relative", &[("p", 2.0)]).unwrap();
        assert!(closed_form_cross_partial(&pr, (0.0, 1.0)).is_err());
        assert!(closed_form_cross_partial(&pr, (1.0, 1.0)).is_err());
        let rel = get_with("relative", &[]).unwrap();
        assert!(matches!(
            closed_form_cross_partial(&rel, (1.0, 2.0)),
            Err(CatalogError::NoClosedForm(_))
        ));
    }

    #[test]
    fn reduction_identity() {
        for (a, b, p) in [(16.0, 1.0, 2.0), (1.0, 1.0, 3.0), (0.3, 2.5, 1.5)] {
            let d = get_with("generalized_chordal", &[("alpha", a), ("beta", b), ("p", p)]).unwrap();
            let r = reduce_generalized_chordal(a, b, p).unwrap();
            for (x, y) in [(1.0, 2.0), (-0.7, 3.1), (5.0, -4.0)] {
                let lhs = d.candidate.eval(x, y).unwrap() * (a * b).powf(1.0 / p);
                let rhs = r.reduced.eval(r.c * x, r.c * y).unwrap();
                assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs(), "{a} {b} {p} at ({x},{y})");
            }
        }
        let id = reduce_generalized_chordal(1.0, 1.0, 3.0).unwrap();
        assert_eq!(id.c, 1.0);
        assert_eq!(id.scaling, 1.0);
        let deg = reduce_generalized_chordal(1.0, 0.0, 1.0).unwrap();
        assert!(deg.degenerate);
        assert_eq!(deg.reduced.eval(2.0, -1.0).unwrap(), 3.0);
    }
}
