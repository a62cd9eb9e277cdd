//! Scalar abstraction shared by every model equation.
//!
//! All residual code is written once, generic over [`Scalar`]. Three
//! implementations exist:
//!
//! * `f64` for plain evaluation,
//! * [`Dual`] for exact forward-mode derivatives, several directions at a time,
//! * [`Trace`] for structural dependency tracking (sparsity detection).
//!
//! Branches in model code must go through [`Scalar::select`] (or the helpers
//! built on it) so that the tracer sees both arms.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign<f64>
{
    fn cst(v: f64) -> Self;
    fn re(&self) -> f64;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn powf(self, p: f64) -> Self;
    fn abs(self) -> Self;
    /// Returns `a` when `cond` holds, otherwise `b`. The tracer merges both.
    fn select(cond: bool, a: Self, b: Self) -> Self;

    fn zero() -> Self {
        Self::cst(0.0)
    }
    fn recip(self) -> Self {
        Self::cst(1.0) / self
    }
    fn powi(self, n: i32) -> Self {
        let mut acc = Self::cst(1.0);
        for _ in 0..n.unsigned_abs() {
            acc = acc * self;
        }
        if n < 0 {
            acc.recip()
        } else {
            acc
        }
    }
    fn max_s(self, other: Self) -> Self {
        Self::select(self.re() >= other.re(), self, other)
    }
    fn min_s(self, other: Self) -> Self {
        Self::select(self.re() <= other.re(), self, other)
    }
    fn clamp_s(self, lo: f64, hi: f64) -> Self {
        let v = self.re();
        if v < lo {
            Self::select(true, self * 0.0 + lo, self)
        } else if v > hi {
            Self::select(true, self * 0.0 + hi, self)
        } else {
            self
        }
    }
}

/// `1 - x` and friends without needing `f64: Sub<S>` bounds.
#[inline]
pub fn rsub<S: Scalar>(a: f64, x: S) -> S {
    -x + a
}

#[inline]
pub fn rdiv<S: Scalar>(a: f64, x: S) -> S {
    x.recip() * a
}

pub fn dot<S: Scalar>(a: &[S], b: &[f64]) -> S {
    let mut acc = S::zero();
    for (x, w) in a.iter().zip(b) {
        acc += *x * *w;
    }
    acc
}

impl Scalar for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn re(&self) -> f64 {
        *self
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline]
    fn select(cond: bool, a: Self, b: Self) -> Self {
        if cond {
            a
        } else {
            b
        }
    }
}

/// Forward-mode dual number carrying `L` directional derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<const L: usize> {
    pub v: f64,
    pub d: [f64; L],
}

impl<const L: usize> Dual<L> {
    pub fn constant(v: f64) -> Self {
        Dual { v, d: [0.0; L] }
    }

    /// A variable seeded with unit derivative in `lane`.
    pub fn variable(v: f64, lane: Option<usize>) -> Self {
        let mut d = [0.0; L];
        if let Some(k) = lane {
            d[k] = 1.0;
        }
        Dual { v, d }
    }

    #[inline]
    fn chain(self, v: f64, dv: f64) -> Self {
        let mut d = self.d;
        for x in &mut d {
            *x *= dv;
        }
        Dual { v, d }
    }
}

impl<const L: usize> Add for Dual<L> {
    type Output = Self;
    #[inline]
    fn add(mut self, o: Self) -> Self {
        self.v += o.v;
        for k in 0..L {
            self.d[k] += o.d[k];
        }
        self
    }
}

impl<const L: usize> Sub for Dual<L> {
    type Output = Self;
    #[inline]
    fn sub(mut self, o: Self) -> Self {
        self.v -= o.v;
        for k in 0..L {
            self.d[k] -= o.d[k];
        }
        self
    }
}

impl<const L: usize> Mul for Dual<L> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let mut d = [0.0; L];
        for k in 0..L {
            d[k] = self.d[k] * o.v + self.v * o.d[k];
        }
        Dual { v: self.v * o.v, d }
    }
}

impl<const L: usize> Div for Dual<L> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.v;
        let q = self.v * inv;
        let mut d = [0.0; L];
        for k in 0..L {
            d[k] = (self.d[k] - q * o.d[k]) * inv;
        }
        Dual { v: q, d }
    }
}

impl<const L: usize> Neg for Dual<L> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self.chain(-self.v, -1.0)
    }
}

impl<const L: usize> Add<f64> for Dual<L> {
    type Output = Self;
    #[inline]
    fn add(mut self, o: f64) -> Self {
        self.v += o;
        self
    }
}

impl<const L: usize> Sub<f64> for Dual<L> {
    type Output = Self;
    #[inline]
    fn sub(mut self, o: f64) -> Self {
        self.v -= o;
        self
    }
}

impl<const L: usize> Mul<f64> for Dual<L> {
    type Output = Self;
    #[inline]
    fn mul(self, o: f64) -> Self {
        self.chain(self.v * o, o)
    }
}

impl<const L: usize> Div<f64> for Dual<L> {
    type Output = Self;
    #[inline]
    fn div(self, o: f64) -> Self {
        self.chain(self.v / o, 1.0 / o)
    }
}

impl<const L: usize> AddAssign for Dual<L> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<const L: usize> SubAssign for Dual<L> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<const L: usize> MulAssign<f64> for Dual<L> {
    #[inline]
    fn mul_assign(&mut self, o: f64) {
        *self = *self * o;
    }
}

impl<const L: usize> Scalar for Dual<L> {
    fn cst(v: f64) -> Self {
        Dual::constant(v)
    }
    fn re(&self) -> f64 {
        self.v
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        let ds = if s > 0.0 { 0.5 / s } else { 0.0 };
        self.chain(s, ds)
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v)
    }
    fn powf(self, p: f64) -> Self {
        let v = self.v.powf(p);
        let dv = if self.v == 0.0 {
            if p > 1.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            p * self.v.powf(p - 1.0)
        };
        self.chain(v, dv)
    }
    fn abs(self) -> Self {
        if self.v < 0.0 {
            -self
        } else {
            self
        }
    }
    fn select(cond: bool, a: Self, b: Self) -> Self {
        if cond {
            a
        } else {
            b
        }
    }
}

/// Maximum number of independent variables a single traced quantity may
/// depend on.
pub const TRACE_CAP: usize = 160;

/// Structural dependency tracer: carries the sorted set of variable indices
/// a quantity depends on.
#[derive(Clone, Copy)]
pub struct Trace {
    v: f64,
    len: u16,
    idx: [u32; TRACE_CAP],
}

impl Debug for Trace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Trace({}, {:?})", self.v, self.deps())
    }
}

impl Trace {
    pub fn variable(v: f64, index: usize) -> Self {
        let mut t = Trace::cst(v);
        t.idx[0] = index as u32;
        t.len = 1;
        t
    }

    pub fn deps(&self) -> &[u32] {
        &self.idx[..self.len as usize]
    }

    fn merged(v: f64, a: &Trace, b: &Trace) -> Trace {
        let (x, y) = (a.deps(), b.deps());
        if y.is_empty() {
            return Trace { v, ..*a };
        }
        if x.is_empty() {
            return Trace { v, ..*b };
        }
        let mut out = Trace::cst(v);
        let (mut i, mut j, mut n) = (0, 0, 0usize);
        while i < x.len() || j < y.len() {
            let next = if j >= y.len() || (i < x.len() && x[i] < y[j]) {
                i += 1;
                x[i - 1]
            } else if i >= x.len() || y[j] < x[i] {
                j += 1;
                y[j - 1]
            } else {
                i += 1;
                j += 1;
                x[i - 1]
            };
            assert!(
                n < TRACE_CAP,
                "dependency trace overflow: a quantity depends on more than {TRACE_CAP} variables"
            );
            out.idx[n] = next;
            n += 1;
        }
        out.len = n as u16;
        out
    }

    fn unary(self, v: f64) -> Self {
        Trace { v, ..self }
    }
}

macro_rules! trace_binop {
    ($tr:ident, $m:ident, $op:tt) => {
        impl $tr for Trace {
            type Output = Trace;
            #[inline]
            fn $m(self, o: Trace) -> Trace {
                Trace::merged(self.v $op o.v, &self, &o)
            }
        }
        impl $tr<f64> for Trace {
            type Output = Trace;
            #[inline]
            fn $m(self, o: f64) -> Trace {
                self.unary(self.v $op o)
            }
        }
    };
}

trace_binop!(Add, add, +);
trace_binop!(Sub, sub, -);
trace_binop!(Mul, mul, *);
trace_binop!(Div, div, /);

impl Neg for Trace {
    type Output = Trace;
    fn neg(self) -> Trace {
        self.unary(-self.v)
    }
}

impl AddAssign for Trace {
    fn add_assign(&mut self, o: Trace) {
        *self = *self + o;
    }
}

impl SubAssign for Trace {
    fn sub_assign(&mut self, o: Trace) {
        *self = *self - o;
    }
}

impl MulAssign<f64> for Trace {
    fn mul_assign(&mut self, o: f64) {
        self.v *= o;
    }
}

impl Scalar for Trace {
    fn cst(v: f64) -> Self {
        Trace {
            v,
            len: 0,
            idx: [0; TRACE_CAP],
        }
    }
    fn re(&self) -> f64 {
        self.v
    }
    fn sqrt(self) -> Self {
        self.unary(self.v.sqrt())
    }
    fn exp(self) -> Self {
        self.unary(self.v.exp())
    }
    fn ln(self) -> Self {
        self.unary(self.v.ln())
    }
    fn powf(self, p: f64) -> Self {
        self.unary(self.v.powf(p))
    }
    fn abs(self) -> Self {
        self.unary(self.v.abs())
    }
    fn select(cond: bool, a: Self, b: Self) -> Self {
        let v = if cond { a.v } else { b.v };
        Trace::merged(v, &a, &b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly<S: Scalar>(x: S, y: S) -> S {
        (x * y + x.exp() / y).sqrt() * x.powf(1.5) - y.ln() + rsub(2.0, x).abs()
    }

    #[test]
    fn dual_matches_central_differences() {
        let (x, y) = (1.3, 0.7);
        let d = poly(Dual::<2>::variable(x, Some(0)), Dual::<2>::variable(y, Some(1)));
        let h = 1e-6;
        let fx = (poly(x + h, y) - poly(x - h, y)) / (2.0 * h);
        let fy = (poly(x, y + h) - poly(x, y - h)) / (2.0 * h);
        assert!((d.d[0] - fx).abs() < 1e-7 * fx.abs().max(1.0));
        assert!((d.d[1] - fy).abs() < 1e-7 * fy.abs().max(1.0));
        assert_eq!(d.v, poly(x, y));
    }

    #[test]
    fn trace_collects_union_of_dependencies() {
        let a = Trace::variable(1.0, 4);
        let b = Trace::variable(2.0, 1);
        let c = Trace::variable(3.0, 9);
        let r = (a * b).exp() + Trace::select(true, c, Trace::cst(0.0));
        assert_eq!(r.deps(), &[1, 4, 9]);
        let s = a.clamp_s(5.0, 6.0);
        assert_eq!(s.deps(), &[4]);
        assert_eq!(s.re(), 5.0);
    }

    #[test]
    fn powi_handles_negative_exponents() {
        assert!((3.0f64.powi(-2) - 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(Scalar::powi(2.0f64, 3), 8.0);
    }
}
