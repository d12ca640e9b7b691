use std::ops::{Add, Div, Mul, Neg, Sub};

use thiserror::Error;

use super::ast::{BinOp, Expr, UnaryFn, Var};

/// Numeric field an expression can be evaluated over.
///
/// Implemented for `f64` and for hyper-dual numbers; everything an evaluator
/// needs beyond the four arithmetic operators lives here.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    /// The real part.
    fn value(self) -> f64;
    /// Value and every derivative slot are finite.
    fn all_finite(self) -> bool;
    /// Any derivative slot is non-zero.
    fn has_seeds(self) -> bool;
    fn abs(self) -> Self;
    /// Sign with `sgn(0) = 0`; locally constant, so derivatives vanish.
    fn sgn(self) -> Self;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn powf(self, p: f64) -> Self;

    /// `self^b` for a positive base and a non-constant exponent.
    fn pow_var(self, b: Self) -> Self {
        (b * self.ln()).exp()
    }

    /// Integer power by square-and-multiply, shared by every scalar type so
    /// that the value slot agrees exactly across types.
    fn powi(self, n: i32) -> Self {
        let mut e = n.unsigned_abs();
        let mut base = self;
        let mut acc = Self::from_f64(1.0);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            e >>= 1;
            if e > 0 {
                base = base * base;
            }
        }
        if n < 0 {
            Self::from_f64(1.0) / acc
        } else {
            acc
        }
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn value(self) -> f64 {
        self
    }
    fn all_finite(self) -> bool {
        self.is_finite()
    }
    fn has_seeds(self) -> bool {
        false
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn sgn(self) -> Self {
        if self > 0.0 {
            1.0
        } else if self < 0.0 {
            -1.0
        } else {
            0.0
        }
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
    fn pow_var(self, b: Self) -> Self {
        f64::powf(self, b)
    }
}

/// Variable bindings for one evaluation.
#[derive(Debug, Clone, Copy, Default)]
pub struct EvalEnv<S> {
    pub x: Option<S>,
    pub y: Option<S>,
}

impl<S: Scalar> EvalEnv<S> {
    pub fn xy(x: S, y: S) -> Self {
        EvalEnv {
            x: Some(x),
            y: Some(y),
        }
    }

    pub fn x(x: S) -> Self {
        EvalEnv {
            x: Some(x),
            y: None,
        }
    }

    pub fn get(&self, v: Var) -> Option<S> {
        match v {
            Var::X => self.x,
            Var::Y => self.y,
        }
    }

    /// Bindings with the roles of `x` and `y` exchanged.
    pub fn swapped(&self) -> Self {
        EvalEnv {
            x: self.y,
            y: self.x,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("variable `{0}` is not bound")]
    UnboundVariable(Var),
    #[error("domain error in `{node}`: {reason}")]
    Domain { node: String, reason: &'static str },
}

fn domain(node: &Expr, reason: &'static str) -> EvalError {
    EvalError::Domain {
        node: node.to_string(),
        reason,
    }
}

/// Counts kink nodes whose switching argument sits (numerically) on its
/// switching point during an evaluation.
#[derive(Debug, Clone, Copy)]
pub struct KinkTracker {
    threshold: f64,
    pub hits: usize,
}

impl KinkTracker {
    /// Threshold `1e-12 · scale`.
    pub fn new(scale: f64) -> Self {
        KinkTracker {
            threshold: 1e-12 * scale.max(1.0),
            hits: 0,
        }
    }

    pub fn hit(&self) -> bool {
        self.hits > 0
    }

    fn observe(&mut self, discriminant: f64) {
        if discriminant.abs() <= self.threshold {
            self.hits += 1;
        }
    }
}

/// Largest integer exponent evaluated by repeated multiplication.
const MAX_INT_EXPONENT: f64 = 64.0;

struct Evaluator<'a, S> {
    env: &'a EvalEnv<S>,
    kinks: Option<&'a mut KinkTracker>,
}

impl<S: Scalar> Evaluator<'_, S> {
    fn note(&mut self, discriminant: f64) {
        if let Some(k) = self.kinks.as_deref_mut() {
            k.observe(discriminant);
        }
    }

    fn eval(&mut self, e: &Expr) -> Result<S, EvalError> {
        let r = match e {
            Expr::Const(c) => S::from_f64(*c),
            Expr::Var(v) => self.env.get(*v).ok_or(EvalError::UnboundVariable(*v))?,
            Expr::Neg(a) => -self.eval(a)?,
            Expr::Unary(f, a) => {
                let a = self.eval(a)?;
                match f {
                    UnaryFn::Abs => {
                        self.note(a.value());
                        a.abs()
                    }
                    UnaryFn::Sgn => {
                        self.note(a.value());
                        a.sgn()
                    }
                    UnaryFn::Sqrt => {
                        if a.value() < 0.0 {
                            return Err(domain(e, "square root of a negative number"));
                        }
                        a.sqrt()
                    }
                    UnaryFn::Exp => a.exp(),
                    UnaryFn::Log => {
                        if a.value() <= 0.0 {
                            return Err(domain(e, "logarithm of a non-positive number"));
                        }
                        a.ln()
                    }
                }
            }
            Expr::Binary(op, a, b) => {
                let (l, r) = (self.eval(a)?, self.eval(b)?);
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => {
                        if r.value() == 0.0 {
                            return Err(domain(e, "division by zero"));
                        }
                        l / r
                    }
                    BinOp::Pow => self.pow(e, l, r)?,
                    BinOp::Min | BinOp::Max => {
                        self.note(l.value() - r.value());
                        let take_left = if *op == BinOp::Min {
                            l.value() <= r.value()
                        } else {
                            l.value() >= r.value()
                        };
                        if take_left {
                            l
                        } else {
                            r
                        }
                    }
                }
            }
            Expr::Piecewise {
                branches,
                otherwise,
            } => {
                let mut chosen: &Expr = otherwise;
                for (cond, branch) in branches {
                    let lhs = self.eval(&cond.lhs)?.value();
                    let rhs = self.eval(&cond.rhs)?.value();
                    self.note(lhs - rhs);
                    if cond.op.holds(lhs, rhs) {
                        chosen = branch;
                        break;
                    }
                }
                self.eval(chosen)?
            }
        };
        if !r.all_finite() {
            return Err(domain(e, "non-finite result or derivative"));
        }
        Ok(r)
    }

    fn pow(&mut self, e: &Expr, base: S, exponent: S) -> Result<S, EvalError> {
        let p = exponent.value();
        if !exponent.has_seeds() {
            if p.fract() == 0.0 && p.abs() <= MAX_INT_EXPONENT {
                if p < 0.0 && base.value() == 0.0 {
                    return Err(domain(e, "zero raised to a negative power"));
                }
                return Ok(base.powi(p as i32));
            }
            if base.value() < 0.0 {
                return Err(domain(e, "negative base with a non-integer exponent"));
            }
            if base.value() == 0.0 && p < 0.0 {
                return Err(domain(e, "zero raised to a negative power"));
            }
            return Ok(base.powf(p));
        }
        if base.value() <= 0.0 {
            return Err(domain(e, "variable exponent needs a positive base"));
        }
        Ok(base.pow_var(exponent))
    }
}

/// Evaluate `e` under `env`.
pub fn eval<S: Scalar>(e: &Expr, env: &EvalEnv<S>) -> Result<S, EvalError> {
    Evaluator { env, kinks: None }.eval(e)
}

/// Evaluate `e` under `env`, recording kink nodes met at their switching point.
pub fn eval_tracked<S: Scalar>(
    e: &Expr,
    env: &EvalEnv<S>,
    kinks: &mut KinkTracker,
) -> Result<S, EvalError> {
    Evaluator {
        env,
        kinks: Some(kinks),
    }
    .eval(e)
}

/// Plain real evaluation at `(x, y)`.
pub fn eval_xy(e: &Expr, x: f64, y: f64) -> Result<f64, EvalError> {
    eval(e, &EvalEnv::xy(x, y))
}

/// Plain real evaluation of a one-variable expression.
pub fn eval_x(e: &Expr, x: f64) -> Result<f64, EvalError> {
    eval(e, &EvalEnv::x(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_xy;

    #[test]
    fn powi_matches_std_on_small_integers() {
        for n in -6..=6 {
            let got = Scalar::powi(1.7_f64, n);
            let want = 1.7_f64.powi(n);
            assert!((got - want).abs() <= 1e-14 * want.abs(), "{n}: {got} vs {want}");
        }
    }

    #[test]
    fn sgn_of_zero_is_zero() {
        let e = parse_xy("sgn(x)").unwrap();
        assert_eq!(eval_xy(&e, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(eval_xy(&e, -3.0, 0.0).unwrap(), -1.0);
    }

    #[test]
    fn domain_errors_are_reported() {
        for src in ["log(x - 1)", "1/(x-y)", "x^0.5", "sqrt(x-2)", "0^(-1)"] {
            let e = parse_xy(src).unwrap();
            let err = eval_xy(&e, -1.0, -1.0).unwrap_err();
            assert!(matches!(err, EvalError::Domain { .. }), "{src}: {err:?}");
        }
    }

    #[test]
    fn unbound_variable() {
        let e = parse_xy("x + y").unwrap();
        let err = eval(&e, &EvalEnv::x(1.0)).unwrap_err();
        assert_eq!(err, EvalError::UnboundVariable(Var::Y));
    }

    #[test]
    fn piecewise_is_first_match() {
        let e = parse_xy("pw(x < 1, 10, x < 2, 20, 30)").unwrap();
        assert_eq!(eval_xy(&e, 0.0, 0.0).unwrap(), 10.0);
        assert_eq!(eval_xy(&e, 1.0, 0.0).unwrap(), 20.0);
        assert_eq!(eval_xy(&e, 5.0, 0.0).unwrap(), 30.0);
    }

    #[test]
    fn kink_tracker_flags_switching_points() {
        let e = parse_xy("abs(y - x) + max(x, 1)").unwrap();
        let mut k = KinkTracker::new(1.0);
        eval_tracked(&e, &EvalEnv::xy(0.5, 0.5), &mut k).unwrap();
        assert_eq!(k.hits, 1);
        let mut k = KinkTracker::new(1.0);
        eval_tracked(&e, &EvalEnv::xy(1.0, 3.0), &mut k).unwrap();
        assert_eq!(k.hits, 1);
        let mut k = KinkTracker::new(1.0);
        eval_tracked(&e, &EvalEnv::xy(2.0, 3.0), &mut k).unwrap();
        assert!(!k.hit());
    }
}
