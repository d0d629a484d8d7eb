//! Minimal forward-mode automatic differentiation.
//!
//! [`Dual`] is generic over any [`Scalar`], so `Dual<Dual<f64>>` yields mixed
//! second derivatives. Closed-form geometry is written once against
//! [`Scalar`] and evaluated either on plain `f64` or on duals.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Copy
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
    fn cst(v: f64) -> Self;
    fn re(&self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sqrt(self) -> Self;
    fn ln(self) -> Self;

    fn zero() -> Self {
        Self::cst(0.0)
    }
    fn recip(self) -> Self {
        Self::cst(1.0) / self
    }
    fn sq(self) -> Self {
        self * self
    }
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn re(&self) -> f64 {
        *self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
}

/// `v + d ε` with `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    pub v: T,
    pub d: T,
}

impl<T: Scalar> Dual<T> {
    pub fn new(v: T, d: T) -> Self {
        Dual { v, d }
    }
    pub fn var(v: T) -> Self {
        Dual { v, d: T::cst(1.0) }
    }
    pub fn constant(v: T) -> Self {
        Dual { v, d: T::zero() }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual::new(self.v + o.v, self.d + o.d)
    }
}
impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual::new(self.v - o.v, self.d - o.d)
    }
}
impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual::new(self.v * o.v, self.d * o.v + self.v * o.d)
    }
}
impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = o.v.recip();
        Dual::new(self.v * inv, (self.d * o.v - self.v * o.d) * inv * inv)
    }
}
impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual::new(-self.v, -self.d)
    }
}
impl<T: Scalar> Add<f64> for Dual<T> {
    type Output = Self;
    fn add(self, o: f64) -> Self {
        Dual::new(self.v + o, self.d)
    }
}
impl<T: Scalar> Sub<f64> for Dual<T> {
    type Output = Self;
    fn sub(self, o: f64) -> Self {
        Dual::new(self.v - o, self.d)
    }
}
impl<T: Scalar> Mul<f64> for Dual<T> {
    type Output = Self;
    fn mul(self, o: f64) -> Self {
        Dual::new(self.v * o, self.d * o)
    }
}
impl<T: Scalar> Div<f64> for Dual<T> {
    type Output = Self;
    fn div(self, o: f64) -> Self {
        Dual::new(self.v / o, self.d / o)
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn cst(v: f64) -> Self {
        Dual::constant(T::cst(v))
    }
    fn re(&self) -> f64 {
        self.v.re()
    }
    fn sin(self) -> Self {
        Dual::new(self.v.sin(), self.d * self.v.cos())
    }
    fn cos(self) -> Self {
        Dual::new(self.v.cos(), -(self.d * self.v.sin()))
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        Dual::new(s, self.d / (s * 2.0))
    }
    fn ln(self) -> Self {
        Dual::new(self.v.ln(), self.d / self.v)
    }
}

/// Value and the two partials with respect to `(x, y)` of a function written
/// against [`Scalar`].
pub fn grad2<F, const N: usize>(f: F, x: f64, y: f64) -> ([f64; N], [f64; N], [f64; N])
where
    F: Fn(Dual<f64>, Dual<f64>) -> [Dual<f64>; N],
{
    let fx = f(Dual::var(x), Dual::constant(y));
    let fy = f(Dual::constant(x), Dual::var(y));
    let mut v = [0.0; N];
    let mut dx = [0.0; N];
    let mut dy = [0.0; N];
    for i in 0..N {
        v[i] = fx[i].v;
        dx[i] = fx[i].d;
        dy[i] = fy[i].d;
    }
    (v, dx, dy)
}
