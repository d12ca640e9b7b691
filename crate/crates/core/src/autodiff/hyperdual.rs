//! Hyper-dual numbers: `v + dx·ε₁ + dy·ε₂ + dxy·ε₁ε₂` with `ε₁² = ε₂² = 0`.
//!
//! Seeding `x` with `ε₁` and `y` with `ε₂` makes the `dxy` slot of any
//! expression equal to the exact mixed partial ∂²f/∂x∂y, free of truncation
//! error. Seeding one variable with both `ε₁` and `ε₂` yields its pure
//! second derivative instead.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::expr::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HyperDual {
    pub v: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxy: f64,
}

impl HyperDual {
    pub const fn new(v: f64, dx: f64, dy: f64, dxy: f64) -> Self {
        HyperDual { v, dx, dy, dxy }
    }

    pub const fn constant(v: f64) -> Self {
        HyperDual::new(v, 0.0, 0.0, 0.0)
    }

    /// Variable carrying the first seed.
    pub const fn seed_x(v: f64) -> Self {
        HyperDual::new(v, 1.0, 0.0, 0.0)
    }

    /// Variable carrying the second seed.
    pub const fn seed_y(v: f64) -> Self {
        HyperDual::new(v, 0.0, 1.0, 0.0)
    }

    /// Variable carrying both seeds; `dxy` of the result is a pure second derivative.
    pub const fn seed_both(v: f64) -> Self {
        HyperDual::new(v, 1.0, 1.0, 0.0)
    }

    /// Apply a scalar function given its value and first two derivatives at `self.v`.
    ///
    /// Zero seed components are never multiplied, so an infinite derivative
    /// only poisons the result when it actually propagates.
    #[inline]
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        let scale = |d: f64, k: f64| if d == 0.0 { 0.0 } else { k * d };
        let cross = if self.dx == 0.0 || self.dy == 0.0 {
            0.0
        } else {
            f2 * (self.dx * self.dy)
        };
        HyperDual {
            v: f0,
            dx: scale(self.dx, f1),
            dy: scale(self.dy, f1),
            dxy: scale(self.dxy, f1) + cross,
        }
    }
}

impl Add for HyperDual {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        HyperDual::new(self.v + o.v, self.dx + o.dx, self.dy + o.dy, self.dxy + o.dxy)
    }
}

impl Sub for HyperDual {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        HyperDual::new(self.v - o.v, self.dx - o.dx, self.dy - o.dy, self.dxy - o.dxy)
    }
}

impl Mul for HyperDual {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        HyperDual::new(
            self.v * o.v,
            self.v * o.dx + self.dx * o.v,
            self.v * o.dy + self.dy * o.v,
            // Cross terms grouped so that swapping the seeds is bit-exact.
            self.v * o.dxy + (self.dx * o.dy + self.dy * o.dx) + self.dxy * o.v,
        )
    }
}

impl Div for HyperDual {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        // Value computed as a plain quotient so it matches f64 evaluation bit for bit.
        let q = self.v / o.v;
        let dx = (self.dx - q * o.dx) / o.v;
        let dy = (self.dy - q * o.dy) / o.v;
        let dxy = (self.dxy - q * o.dxy - (dx * o.dy + dy * o.dx)) / o.v;
        HyperDual::new(q, dx, dy, dxy)
    }
}

impl Neg for HyperDual {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        HyperDual::new(-self.v, -self.dx, -self.dy, -self.dxy)
    }
}

fn sgn0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl Scalar for HyperDual {
    fn from_f64(v: f64) -> Self {
        HyperDual::constant(v)
    }

    fn value(self) -> f64 {
        self.v
    }

    fn all_finite(self) -> bool {
        self.v.is_finite() && self.dx.is_finite() && self.dy.is_finite() && self.dxy.is_finite()
    }

    fn has_seeds(self) -> bool {
        self.dx != 0.0 || self.dy != 0.0 || self.dxy != 0.0
    }

    fn abs(self) -> Self {
        self.chain(self.v.abs(), sgn0(self.v), 0.0)
    }

    fn sgn(self) -> Self {
        HyperDual::constant(sgn0(self.v))
    }

    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }

    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    fn ln(self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v, -1.0 / (self.v * self.v))
    }

    fn powf(self, p: f64) -> Self {
        let f0 = self.v.powf(p);
        let f1 = p * self.v.powf(p - 1.0);
        let f2 = p * (p - 1.0) * self.v.powf(p - 2.0);
        self.chain(f0, f1, f2)
    }

    fn pow_var(self, b: Self) -> Self {
        let mut r = (b * self.ln()).exp();
        // Keep the value slot identical to plain real evaluation.
        r.v = self.v.powf(b.v);
        r
    }
}
