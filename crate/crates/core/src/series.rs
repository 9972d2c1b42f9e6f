//! Truncated power series in `q²` with real coefficients.

use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul};

/// Default truncation order (powers of `q²` up to `q^64`).
pub const DEFAULT_ORDER: usize = 32;

/// A power series `c_0 + c_1 q² + … + c_K q^{2K}`.
///
/// Arithmetic between series of different orders truncates to the smaller one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesQ {
    coeffs: Vec<f64>,
}

impl SeriesQ {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return invalid("series needs at least one coefficient");
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return invalid("series coefficients must be finite");
        }
        Ok(Self { coeffs })
    }

    pub fn zero(order: usize) -> Self {
        Self { coeffs: vec![0.0; order + 1] }
    }

    pub fn constant(c: f64, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = c;
        s
    }

    /// The monomial `c·(q²)^k`, truncated to `order`.
    pub fn monomial(c: f64, k: usize, order: usize) -> Self {
        let mut s = Self::zero(order);
        if k <= order {
            s.coeffs[k] = c;
        }
        s
    }

    /// Expansion of `1/(1 − (q²)^n)`.
    pub fn geom(n: usize, order: usize) -> Result<Self> {
        if n == 0 {
            return invalid("geom requires n >= 1");
        }
        let coeffs = (0..=order).map(|j| if j % n == 0 { 1.0 } else { 0.0 }).collect();
        Ok(Self { coeffs })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn truncate(&self, order: usize) -> Self {
        let k = order.min(self.order());
        Self { coeffs: self.coeffs[..=k].to_vec() }
    }

    pub fn scale(&self, a: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| a * c).collect() }
    }

    /// Horner evaluation in `q²`.
    pub fn eval(&self, q: f64) -> Result<f64> {
        if !(q.abs() < 1.0) {
            return invalid(format!("series evaluation needs |q| < 1, got {q}"));
        }
        let x = q * q;
        Ok(self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c))
    }

    pub fn add(&self, other: &Self) -> Self {
        let k = self.order().min(other.order());
        let coeffs = (0..=k).map(|j| self.coeffs[j] + other.coeffs[j]).collect();
        Self { coeffs }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let k = self.order().min(other.order());
        let mut coeffs = vec![0.0; k + 1];
        for (i, a) in self.coeffs.iter().take(k + 1).enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in other.coeffs.iter().take(k + 1 - i).enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Self { coeffs }
    }
}

impl Add for &SeriesQ {
    type Output = SeriesQ;
    fn add(self, rhs: Self) -> SeriesQ {
        SeriesQ::add(self, rhs)
    }
}

impl Mul for &SeriesQ {
    type Output = SeriesQ;
    fn mul(self, rhs: Self) -> SeriesQ {
        SeriesQ::mul(self, rhs)
    }
}
