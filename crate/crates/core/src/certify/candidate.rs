use serde::Serialize;

use crate::expr::{eval_xy, parse_xy, BinOp, EvalError, Expr, ParseError, Var};

/// Known non-smooth set Λ of a candidate, besides the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaSet {
    /// Smooth off the diagonal.
    Empty,
    /// `x·y = 0`.
    Axes,
    /// `x·y = 0` together with `x + y = 0`.
    AxesAndAntiDiagonal,
}

impl LambdaSet {
    pub fn is_empty(self) -> bool {
        self == LambdaSet::Empty
    }

    /// Distance-like measure of how far `(x, y)` is from Λ.
    pub fn distance(self, x: f64, y: f64) -> f64 {
        match self {
            LambdaSet::Empty => f64::INFINITY,
            LambdaSet::Axes => x.abs().min(y.abs()),
            LambdaSet::AxesAndAntiDiagonal => x.abs().min(y.abs()).min((x + y).abs()),
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            LambdaSet::Empty => "none",
            LambdaSet::Axes => "xy = 0",
            LambdaSet::AxesAndAntiDiagonal => "xy = 0 or x + y = 0",
        }
    }
}

/// Change of variables `h(x) = x^{2n+1}` applied to both arguments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reparametrization {
    pub n: u32,
    pub rationale: String,
}

impl Reparametrization {
    pub fn exponent(&self) -> u32 {
        2 * self.n + 1
    }

    pub fn h(&self, x: f64) -> f64 {
        x.powi(self.exponent() as i32)
    }

    fn compose(&self, e: &Expr) -> Expr {
        let k = Expr::Const(self.exponent() as f64);
        let hx = Expr::binary(BinOp::Pow, Expr::Var(Var::X), k.clone());
        let hy = Expr::binary(BinOp::Pow, Expr::Var(Var::Y), k);
        e.substitute_both(&hx, &hy)
    }
}

/// A function `d(x, y)` proposed as a metric on ℝ, with its metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricCandidate {
    pub label: String,
    pub source: String,
    /// The candidate as given.
    pub expr: Expr,
    pub lambda: LambdaSet,
    /// When set, [`MetricCandidate::effective`] is `d(h(x), h(y))`.
    pub reparam: Option<Reparametrization>,
    effective: Expr,
}

impl MetricCandidate {
    pub fn new(label: impl Into<String>, source: impl Into<String>, expr: Expr) -> Self {
        MetricCandidate {
            label: label.into(),
            source: source.into(),
            effective: expr.clone(),
            expr,
            lambda: LambdaSet::Empty,
            reparam: None,
        }
    }

    /// Parse `source` as an expression in `x` and `y`.
    pub fn parse(label: impl Into<String>, source: &str) -> Result<Self, ParseError> {
        let expr = parse_xy(source)?;
        Ok(MetricCandidate::new(label, source, expr))
    }

    pub fn with_lambda(mut self, lambda: LambdaSet) -> Self {
        self.lambda = lambda;
        self
    }

    /// The same candidate composed with `h × h`.
    pub fn reparametrized(&self, r: Reparametrization) -> Self {
        let mut out = self.clone();
        out.effective = r.compose(&self.expr);
        out.reparam = Some(r);
        out
    }

    /// Expression actually differentiated: `d` or `d ∘ (h × h)`.
    pub fn effective(&self) -> &Expr {
        &self.effective
    }

    /// `d(x, y)` of the raw candidate.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        eval_xy(&self.expr, x, y)
    }

    /// The effective expression at `(x, y)`.
    pub fn eval_effective(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        eval_xy(&self.effective, x, y)
    }
}
