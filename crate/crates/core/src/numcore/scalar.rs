//! Scalar arithmetic with exact derivatives.
//!
//! `Dual<S>` nests: `Dual<Dual<f64>>` carries exact second derivatives along
//! two seed directions. `HyperDual` is the flat second-order type with one
//! mixed slot.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic shared by reals and the derivative-carrying types.
pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn from_f64(v: f64) -> Self;
    /// Real part (the value with all derivative slots dropped).
    fn re(&self) -> f64;
    /// True when every slot is finite.
    fn is_finite(&self) -> bool;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tan(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn atan(self) -> Self;
    fn powi(self, n: i32) -> Self;
    /// Power with a constant real exponent.
    fn powf(self, e: f64) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn recip(self) -> Self {
        Self::one() / self
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn re(&self) -> f64 {
        *self
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn tan(self) -> Self {
        f64::tan(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn atan(self) -> Self {
        f64::atan(self)
    }
    fn powi(self, n: i32) -> Self {
        // repeated multiplication keeps 0^n exact
        let mut acc = 1.0;
        let mut base = if n < 0 { 1.0 / self } else { self };
        let mut k = n.unsigned_abs();
        while k > 0 {
            if k & 1 == 1 {
                acc *= base;
            }
            base *= base;
            k >>= 1;
        }
        acc
    }
    fn powf(self, e: f64) -> Self {
        f64::powf(self, e)
    }
}

/// First-order dual number `re + eps·ε` with `ε² = 0` over any scalar.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<S> {
    pub re: S,
    pub eps: S,
}

impl<S: Scalar> Dual<S> {
    pub fn new(re: S, eps: S) -> Self {
        Dual { re, eps }
    }
    pub fn constant(re: S) -> Self {
        Dual { re, eps: S::zero() }
    }
    pub fn variable(re: S) -> Self {
        Dual { re, eps: S::one() }
    }
    fn chain(self, value: S, deriv: S) -> Self {
        Dual { re: value, eps: self.eps * deriv }
    }
}

impl<S: Scalar> Add for Dual<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual { re: self.re + o.re, eps: self.eps + o.eps }
    }
}
impl<S: Scalar> Sub for Dual<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual { re: self.re - o.re, eps: self.eps - o.eps }
    }
}
impl<S: Scalar> Mul for Dual<S> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual { re: self.re * o.re, eps: self.re * o.eps + self.eps * o.re }
    }
}
impl<S: Scalar> Div for Dual<S> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = o.re.recip();
        let q = self.re * inv;
        Dual { re: q, eps: (self.eps - q * o.eps) * inv }
    }
}
impl<S: Scalar> Neg for Dual<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual { re: -self.re, eps: -self.eps }
    }
}
impl<S: Scalar> Add<f64> for Dual<S> {
    type Output = Self;
    fn add(self, o: f64) -> Self {
        Dual { re: self.re + o, eps: self.eps }
    }
}
impl<S: Scalar> Sub<f64> for Dual<S> {
    type Output = Self;
    fn sub(self, o: f64) -> Self {
        Dual { re: self.re - o, eps: self.eps }
    }
}
impl<S: Scalar> Mul<f64> for Dual<S> {
    type Output = Self;
    fn mul(self, o: f64) -> Self {
        Dual { re: self.re * o, eps: self.eps * o }
    }
}
impl<S: Scalar> Div<f64> for Dual<S> {
    type Output = Self;
    fn div(self, o: f64) -> Self {
        Dual { re: self.re / o, eps: self.eps / o }
    }
}

impl<S: Scalar> Scalar for Dual<S> {
    fn from_f64(v: f64) -> Self {
        Dual::constant(S::from_f64(v))
    }
    fn re(&self) -> f64 {
        self.re.re()
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.eps.is_finite()
    }
    fn sin(self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }
    fn tan(self) -> Self {
        let t = self.re.tan();
        self.chain(t, t * t + 1.0)
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        self.chain(self.re.ln(), self.re.recip())
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, (s * 2.0).recip())
    }
    fn abs(self) -> Self {
        if self.re.re() < 0.0 {
            -self
        } else {
            self
        }
    }
    fn atan(self) -> Self {
        self.chain(self.re.atan(), (self.re * self.re + 1.0).recip())
    }
    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::one();
        }
        self.chain(self.re.powi(n), self.re.powi(n - 1) * n as f64)
    }
    fn powf(self, e: f64) -> Self {
        self.chain(self.re.powf(e), self.re.powf(e - 1.0) * e)
    }
}

/// Hyper-dual number `value + d1·ε₁ + d2·ε₂ + d12·ε₁ε₂` with `ε₁² = ε₂² = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct HyperDual {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub d12: f64,
}

impl HyperDual {
    pub fn new(value: f64, d1: f64, d2: f64, d12: f64) -> Self {
        HyperDual { value, d1, d2, d12 }
    }
    pub fn constant(value: f64) -> Self {
        HyperDual { value, ..Default::default() }
    }
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        HyperDual {
            value: f0,
            d1: f1 * self.d1,
            d2: f1 * self.d2,
            d12: f1 * self.d12 + f2 * self.d1 * self.d2,
        }
    }
}

impl Add for HyperDual {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        HyperDual::new(self.value + o.value, self.d1 + o.d1, self.d2 + o.d2, self.d12 + o.d12)
    }
}
impl Sub for HyperDual {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        HyperDual::new(self.value - o.value, self.d1 - o.d1, self.d2 - o.d2, self.d12 - o.d12)
    }
}
impl Mul for HyperDual {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        HyperDual::new(
            self.value * o.value,
            self.value * o.d1 + self.d1 * o.value,
            self.value * o.d2 + self.d2 * o.value,
            self.value * o.d12 + self.d1 * o.d2 + self.d2 * o.d1 + self.d12 * o.value,
        )
    }
}
impl Div for HyperDual {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let v = o.value;
        self * o.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }
}
impl Neg for HyperDual {
    type Output = Self;
    fn neg(self) -> Self {
        HyperDual::new(-self.value, -self.d1, -self.d2, -self.d12)
    }
}
impl Add<f64> for HyperDual {
    type Output = Self;
    fn add(self, o: f64) -> Self {
        HyperDual { value: self.value + o, ..self }
    }
}
impl Sub<f64> for HyperDual {
    type Output = Self;
    fn sub(self, o: f64) -> Self {
        HyperDual { value: self.value - o, ..self }
    }
}
impl Mul<f64> for HyperDual {
    type Output = Self;
    fn mul(self, o: f64) -> Self {
        HyperDual::new(self.value * o, self.d1 * o, self.d2 * o, self.d12 * o)
    }
}
impl Div<f64> for HyperDual {
    type Output = Self;
    fn div(self, o: f64) -> Self {
        HyperDual::new(self.value / o, self.d1 / o, self.d2 / o, self.d12 / o)
    }
}

impl Scalar for HyperDual {
    fn from_f64(v: f64) -> Self {
        HyperDual::constant(v)
    }
    fn re(&self) -> f64 {
        self.value
    }
    fn is_finite(&self) -> bool {
        self.value.is_finite() && self.d1.is_finite() && self.d2.is_finite() && self.d12.is_finite()
    }
    fn sin(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }
    fn tan(self) -> Self {
        let t = self.value.tan();
        let sec2 = 1.0 + t * t;
        self.chain(t, sec2, 2.0 * t * sec2)
    }
    fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }
    fn ln(self) -> Self {
        let v = self.value;
        self.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
    }
    fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.value))
    }
    fn abs(self) -> Self {
        if self.value < 0.0 {
            -self
        } else {
            self
        }
    }
    fn atan(self) -> Self {
        let v = self.value;
        let d = 1.0 / (1.0 + v * v);
        self.chain(v.atan(), d, -2.0 * v * d * d)
    }
    fn powi(self, n: i32) -> Self {
        match n {
            0 => Self::one(),
            1 => self,
            _ => {
                let v = self.value;
                let nf = n as f64;
                self.chain(v.powi(n), nf * Scalar::powi(v, n - 1), nf * (nf - 1.0) * Scalar::powi(v, n - 2))
            }
        }
    }
    fn powf(self, e: f64) -> Self {
        let v = self.value;
        self.chain(v.powf(e), e * v.powf(e - 1.0), e * (e - 1.0) * v.powf(e - 2.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyperdual_product_rule() {
        let x = HyperDual::new(2.0, 1.0, 0.0, 0.0);
        let y = HyperDual::new(5.0, 0.0, 1.0, 0.0);
        let p = x * y;
        assert_eq!((p.value, p.d1, p.d2, p.d12), (10.0, 5.0, 2.0, 1.0));
    }

    #[test]
    fn hyperdual_second_derivative_of_sin() {
        let x = HyperDual::new(0.7, 1.0, 1.0, 0.0);
        let s = x.sin();
        assert!((s.d12 + 0.7f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn nested_dual_matches_hyperdual() {
        // f(x, y) = exp(x y) / (1 + y^2), mixed partial at (0.3, -0.8)
        fn f<S: Scalar>(x: S, y: S) -> S {
            (x * y).exp() / (y * y + 1.0)
        }
        let hx = HyperDual::new(0.3, 1.0, 0.0, 0.0);
        let hy = HyperDual::new(-0.8, 0.0, 1.0, 0.0);
        let h = f(hx, hy);
        let dx = Dual::new(Dual::new(0.3, 1.0), Dual::new(0.0, 0.0));
        let dy = Dual::new(Dual::new(-0.8, 0.0), Dual::new(1.0, 0.0));
        let d = f(dx, dy);
        assert!((h.d12 - d.eps.eps).abs() < 1e-14);
        assert!((h.d1 - d.re.eps).abs() < 1e-14);
        assert!((h.d2 - d.eps.re).abs() < 1e-14);
    }

    #[test]
    fn powi_at_zero_base_is_exact() {
        let x = HyperDual::new(0.0, 1.0, 1.0, 0.0);
        let p = x.powi(2);
        assert_eq!((p.value, p.d1, p.d12), (0.0, 0.0, 2.0));
        assert_eq!(Scalar::powi(0.0f64, 3), 0.0);
        assert_eq!(Scalar::powi(2.0f64, -2), 0.25);
    }
}
