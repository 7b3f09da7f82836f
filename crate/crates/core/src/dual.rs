//! Forward-mode dual numbers.
//!
//! `Dual<T>` carries a value and one directional derivative. Nesting
//! (`Dual<Dual<f64>>`) yields mixed second derivatives, which is how the
//! Hessians used by the Minkowski check and the Newton solver are formed.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Real-like scalar that expressions and built-in Lagrangians are generic over.
pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn cst(v: f64) -> Self;
    /// Underlying real value.
    fn re(&self) -> f64;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tan(self) -> Self;
    fn abs(self) -> Self;
    fn powi(self, k: i32) -> Self;
    fn powf(self, e: f64) -> Self;

    fn pow(self, e: Self) -> Self {
        (e * self.ln()).exp()
    }
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn re(&self) -> f64 {
        *self
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
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn tan(self) -> Self {
        f64::tan(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn powi(self, k: i32) -> Self {
        f64::powi(self, k)
    }
    fn powf(self, e: f64) -> Self {
        f64::powf(self, e)
    }
    fn pow(self, e: Self) -> Self {
        f64::powf(self, e)
    }
}

/// A value together with one tangent component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

impl<T: Scalar> Dual<T> {
    pub fn new(re: T, eps: T) -> Self {
        Dual { re, eps }
    }

    pub fn constant(re: T) -> Self {
        Dual { re, eps: T::cst(0.0) }
    }

    pub fn variable(re: T) -> Self {
        Dual { re, eps: T::cst(1.0) }
    }

    // chain rule for a unary function with value f(re) and slope f'(re)
    fn chain(self, value: T, slope: T) -> Self {
        Dual { re: value, eps: self.eps * slope }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual { re: self.re + o.re, eps: self.eps + o.eps }
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual { re: self.re - o.re, eps: self.eps - o.eps }
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual { re: self.re * o.re, eps: self.re * o.eps + self.eps * o.re }
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = T::cst(1.0) / o.re;
        let re = self.re * inv;
        Dual { re, eps: (self.eps - re * o.eps) * inv }
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual { re: -self.re, eps: -self.eps }
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn cst(v: f64) -> Self {
        Dual::constant(T::cst(v))
    }
    fn re(&self) -> f64 {
        self.re.re()
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, T::cst(0.5) / s)
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        self.chain(self.re.ln(), T::cst(1.0) / self.re)
    }
    fn sin(self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }
    fn tan(self) -> Self {
        let t = self.re.tan();
        self.chain(t, T::cst(1.0) + t * t)
    }
    fn abs(self) -> Self {
        if self.re.re() < 0.0 {
            -self
        } else {
            self
        }
    }
    fn powi(self, k: i32) -> Self {
        match k {
            0 => Self::cst(1.0),
            1 => self,
            _ => self.chain(self.re.powi(k), T::cst(k as f64) * self.re.powi(k - 1)),
        }
    }
    fn powf(self, e: f64) -> Self {
        self.chain(self.re.powf(e), T::cst(e) * self.re.powf(e - 1.0))
    }
}

/// Second-order jet: value, gradient and Hessian of a scalar function.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Row-major `k x k` Hessian.
    pub hess: Vec<f64>,
}

/// First derivatives of `f` at `point` by one forward sweep per coordinate.
pub fn gradient<F>(f: F, point: &[f64]) -> (f64, Vec<f64>)
where
    F: Fn(&[Dual<f64>]) -> Dual<f64>,
{
    let k = point.len();
    let mut args: Vec<Dual<f64>> = point.iter().map(|&v| Dual::constant(v)).collect();
    let mut value = f64::NAN;
    let mut grad = vec![0.0; k];
    if k == 0 {
        return (f(&args).re, grad);
    }
    for a in 0..k {
        args[a].eps = 1.0;
        let r = f(&args);
        value = r.re;
        grad[a] = r.eps;
        args[a].eps = 0.0;
    }
    (value, grad)
}

/// Value, gradient and Hessian of `f` at `point` using nested duals, one
/// evaluation per unordered coordinate pair.
pub fn hessian<F>(f: F, point: &[f64]) -> Jet2
where
    F: Fn(&[Dual<Dual<f64>>]) -> Dual<Dual<f64>>,
{
    let k = point.len();
    let zero = Dual::constant(0.0);
    let mut args: Vec<Dual<Dual<f64>>> =
        point.iter().map(|&v| Dual::new(Dual::constant(v), zero)).collect();
    let mut jet = Jet2 { value: f64::NAN, grad: vec![0.0; k], hess: vec![0.0; k * k] };
    if k == 0 {
        jet.value = f(&args).re.re;
        return jet;
    }
    for a in 0..k {
        for b in a..k {
            args[a].re.eps = 1.0;
            args[b].eps.re = 1.0;
            let r = f(&args);
            args[a].re.eps = 0.0;
            args[b].eps.re = 0.0;
            jet.value = r.re.re;
            if a == b {
                jet.grad[a] = r.eps.re;
            }
            jet.hess[a * k + b] = r.eps.eps;
            jet.hess[b * k + a] = r.eps.eps;
        }
    }
    jet
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_quotient_rules() {
        let x = Dual::variable(3.0);
        let y = Dual::constant(2.0);
        let p = x * x * y;
        assert_eq!(p.re, 18.0);
        assert_eq!(p.eps, 12.0);
        let q = y / x;
        assert!((q.eps + 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn elementary_functions_match_closed_forms() {
        let x = 0.7;
        let d = Dual::variable(x);
        assert!((d.sqrt().eps - 0.5 / x.sqrt()).abs() < 1e-15);
        assert!((d.ln().eps - 1.0 / x).abs() < 1e-15);
        assert!((d.sin().eps - x.cos()).abs() < 1e-15);
        assert!((d.tan().eps - 1.0 / (x.cos() * x.cos())).abs() < 1e-14);
        assert!((d.powf(2.5).eps - 2.5 * x.powf(1.5)).abs() < 1e-14);
        assert!((d.powi(3).eps - 3.0 * x * x).abs() < 1e-15);
        assert!((d.pow(Dual::constant(2.5)).eps - 2.5 * x.powf(1.5)).abs() < 1e-14);
    }

    #[test]
    fn nested_duals_give_the_hessian() {
        // f(a, b) = a^2 b + sin(a b)
        let f = |v: &[Dual<Dual<f64>>]| v[0] * v[0] * v[1] + (v[0] * v[1]).sin();
        let (a, b) = (0.3, -1.2);
        let jet = hessian(f, &[a, b]);
        let c = (a * b).cos();
        let s = (a * b).sin();
        assert!((jet.grad[0] - (2.0 * a * b + b * c)).abs() < 1e-14);
        assert!((jet.grad[1] - (a * a + a * c)).abs() < 1e-14);
        assert!((jet.hess[0] - (2.0 * b - b * b * s)).abs() < 1e-14);
        assert!((jet.hess[1] - (2.0 * a + c - a * b * s)).abs() < 1e-14);
        assert_eq!(jet.hess[1], jet.hess[2]);
        assert!((jet.hess[3] + a * a * s).abs() < 1e-14);
    }
}
