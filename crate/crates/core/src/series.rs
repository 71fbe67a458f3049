//! Truncated power series over `f64`, modulo `z^{N+1}`.

use std::ops::{Add, Mul, Neg, Sub};

use serde::Serialize;

use crate::error::{Error, Result};

/// Coefficients `c_0..c_N` of a power series truncated after `z^N`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruncatedSeries {
    coeffs: Vec<f64>,
}

impl TruncatedSeries {
    /// Panics on an empty vector; a series has at least its constant term.
    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a truncated series needs a constant term");
        Self { coeffs }
    }

    pub fn zeros(order: usize) -> Self {
        Self::new(vec![0.0; order + 1])
    }

    pub fn constant(c: f64, order: usize) -> Self {
        let mut s = Self::zeros(order);
        s.coeffs[0] = c;
        s
    }

    /// `z` itself.
    pub fn identity(order: usize) -> Self {
        Self::monomial(1.0, 1, order)
    }

    /// `c z^k`.
    pub fn monomial(c: f64, k: usize, order: usize) -> Self {
        let mut s = Self::zeros(order);
        if k <= order {
            s.coeffs[k] = c;
        }
        s
    }

    /// Polynomial `p_0 + p_1 z + …`, truncated or zero-padded to `order`.
    pub fn polynomial(p: &[f64], order: usize) -> Self {
        let mut s = Self::zeros(order);
        for (a, b) in s.coeffs.iter_mut().zip(p) {
            *a = *b;
        }
        s
    }

    pub fn from_fn(order: usize, f: impl FnMut(usize) -> f64) -> Self {
        Self::new((0..=order).map(f).collect())
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// `c_n`, or 0 past the truncation order.
    pub fn coeff(&self, n: usize) -> f64 {
        self.coeffs.get(n).copied().unwrap_or(0.0)
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self::polynomial(&self.coeffs, order)
    }

    pub fn scale(&self, a: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| a * c).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        Self::from_fn(n, |k| self.coeffs[k] + other.coeffs[k])
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        Self::from_fn(n, |k| self.coeffs[k] - other.coeffs[k])
    }

    /// Cauchy product, at the smaller of the two orders.
    pub fn mul(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        Self::from_fn(n, |k| {
            (0..=k).map(|j| self.coeffs[j] * other.coeffs[k - j]).sum()
        })
    }

    /// `1/f`; needs `c_0 ≠ 0`.
    pub fn reciprocal(&self) -> Result<Self> {
        let a0 = self.coeffs[0];
        if a0 == 0.0 || !a0.is_finite() {
            return Err(Error::SeriesPrecondition {
                op: "reciprocal",
                index: 0,
                value: a0,
            });
        }
        let n = self.order();
        let mut b = vec![0.0; n + 1];
        b[0] = 1.0 / a0;
        for k in 1..=n {
            let s: f64 = (1..=k).map(|j| self.coeffs[j] * b[k - j]).sum();
            b[k] = -s / a0;
        }
        Ok(Self::new(b))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.reciprocal()?))
    }

    /// Principal square root; needs `c_0 > 0`.
    pub fn sqrt(&self) -> Result<Self> {
        let a0 = self.coeffs[0];
        if !(a0 > 0.0) || !a0.is_finite() {
            return Err(Error::SeriesPrecondition {
                op: "sqrt",
                index: 0,
                value: a0,
            });
        }
        let n = self.order();
        let mut b = vec![0.0; n + 1];
        b[0] = a0.sqrt();
        for k in 1..=n {
            let s: f64 = (1..k).map(|j| b[j] * b[k - j]).sum();
            b[k] = (self.coeffs[k] - s) / (2.0 * b[0]);
        }
        Ok(Self::new(b))
    }

    /// `f(g(z))` by Horner's scheme; needs `g(0) = 0`. The result has the
    /// smaller of the two orders.
    pub fn compose(&self, g: &Self) -> Result<Self> {
        if g.coeffs[0] != 0.0 {
            return Err(Error::SeriesPrecondition {
                op: "compose",
                index: 0,
                value: g.coeffs[0],
            });
        }
        let n = self.order().min(g.order());
        let g = g.truncate(n);
        let mut acc = Self::zeros(n);
        for &c in self.coeffs.iter().rev() {
            acc = acc.mul(&g);
            acc.coeffs[0] += c;
        }
        Ok(acc)
    }

    /// `f'`, one order lower: the top coefficient of `f'` is not determined
    /// by `c_0..c_N`.
    pub fn derivative(&self) -> Self {
        let n = self.order();
        if n == 0 {
            return Self::zeros(0);
        }
        Self::from_fn(n - 1, |k| (k + 1) as f64 * self.coeffs[k + 1])
    }

    /// `z f'(z)`, exact at the same order.
    pub fn euler(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| k as f64 * c)
                .collect(),
        )
    }

    /// Value of the truncated polynomial at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// `max_n |a_n − b_n|` over the common order.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Add for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn add(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        TruncatedSeries::add(self, rhs)
    }
}

impl Sub for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn sub(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        TruncatedSeries::sub(self, rhs)
    }
}

impl Mul for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn mul(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        TruncatedSeries::mul(self, rhs)
    }
}

impl Mul<&TruncatedSeries> for f64 {
    type Output = TruncatedSeries;
    fn mul(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        rhs.scale(self)
    }
}

impl Neg for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn neg(self) -> TruncatedSeries {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn one_minus_z(order: usize) -> TruncatedSeries {
        TruncatedSeries::polynomial(&[1.0, -1.0], order)
    }

    #[test]
    fn sqrt_of_one_minus_z() {
        let s = one_minus_z(4).sqrt().unwrap();
        assert_abs_diff_eq!(s.coeff(0), 1.0);
        assert_abs_diff_eq!(s.coeff(1), -0.5);
        assert_abs_diff_eq!(s.coeff(2), -0.125);
        assert_abs_diff_eq!(s.coeff(3), -1.0 / 16.0);
    }

    #[test]
    fn reciprocal_of_one_minus_z() {
        let r = one_minus_z(10).reciprocal().unwrap();
        assert!(r.coeffs().iter().all(|&c| c == 1.0));
    }

    #[test]
    fn compose_with_identity() {
        let f = TruncatedSeries::new(vec![0.3, -1.0, 2.5, 0.25]);
        let id = TruncatedSeries::identity(3);
        assert_eq!(f.compose(&id).unwrap(), f);
    }

    #[test]
    fn preconditions_report_offender() {
        let f = TruncatedSeries::new(vec![0.0, 1.0]);
        assert_eq!(
            f.reciprocal(),
            Err(Error::SeriesPrecondition {
                op: "reciprocal",
                index: 0,
                value: 0.0
            })
        );
        assert!(matches!(
            TruncatedSeries::new(vec![-1.0, 1.0]).sqrt(),
            Err(Error::SeriesPrecondition { op: "sqrt", .. })
        ));
        let g = TruncatedSeries::new(vec![0.5, 1.0]);
        assert!(matches!(
            f.compose(&g),
            Err(Error::SeriesPrecondition { op: "compose", .. })
        ));
    }

    #[test]
    fn derivative_and_euler() {
        let f = TruncatedSeries::new(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(f.derivative().coeffs(), &[2.0, 6.0, 12.0]);
        assert_eq!(f.euler().coeffs(), &[0.0, 2.0, 6.0, 12.0]);
        assert_eq!(f.eval(2.0), 1.0 + 4.0 + 12.0 + 32.0);
    }

    #[test]
    fn exp_composed_with_log() {
        // exp(log(1/(1−z))) = 1/(1−z)
        let n = 12;
        let mut fact = 1.0;
        let exp = TruncatedSeries::from_fn(n, |k| {
            if k > 0 {
                fact *= k as f64;
            }
            1.0 / fact
        });
        let log = TruncatedSeries::from_fn(n, |k| if k == 0 { 0.0 } else { 1.0 / k as f64 });
        let e = exp.compose(&log).unwrap();
        for c in e.coeffs() {
            assert_abs_diff_eq!(*c, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn mixed_orders_truncate() {
        let a = TruncatedSeries::new(vec![1.0; 5]);
        let b = TruncatedSeries::new(vec![1.0; 3]);
        assert_eq!((&a * &b).order(), 2);
        assert_eq!((&a + &b).order(), 2);
    }
}
