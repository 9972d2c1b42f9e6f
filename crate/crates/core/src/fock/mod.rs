//! Truncated two-copy boson Fock space with winding sectors.
//!
//! Modes `b_A(n)` with `[b_A(m), b_B(n)] = m δ_{m,−n} δ_{AB}` act on occupation
//! states; `R_A` shifts the winding `w_A` and `Q = b₁(0)` reads off `w₁`.
//! The representation of the loop algebra is `β(n) ↦ c_n b₁(n) + s_n b₂(−n)`.

mod basis;
mod ops;
mod thermal;
mod vector;
mod vertex;

pub use basis::{oscillator_count, slot, FockBasis, FockState, OPERATOR_CAP, SECTOR_CAP};
pub use ops::{
    apply_q, mode_ops, shift_winding, FockOperator, Ladder, ModeOps, NormalPoly, NormalTerm,
};
pub use thermal::{
    monomial_family, thermal_identity_check, thermal_expectation, vacuum_expectation, ThermalA, ThermalMonomial,
    ThermalValue,
};
pub use vector::FockVector;
pub use vertex::{apply_insertion, apply_insertion_commuted, apply_vertex, vertex_matrix_element, VertexSpec};

use crate::elliptic::{cn2, sn2};
use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

/// Bogoliubov coefficients `c_n, s_n` for `n = 1..=M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepCoeffs {
    c: Vec<f64>,
    s: Vec<f64>,
}

impl RepCoeffs {
    /// Thermal choice `c_n = (1 − q^{2n})^{−1/2}`, `s_n = q^n c_n`.
    pub fn from_q(q: f64, mode_cutoff: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&q) {
            return invalid(format!("nome must satisfy 0 <= q < 1, got {q}"));
        }
        let c = (1..=mode_cutoff).map(|n| cn2(n, q).sqrt()).collect();
        let s = (1..=mode_cutoff).map(|n| sn2(n, q).sqrt()).collect();
        Ok(Self { c, s })
    }

    /// Zero-temperature representation `c_n = 1`, `s_n = 0`.
    pub fn trivial(mode_cutoff: usize) -> Self {
        Self { c: vec![1.0; mode_cutoff], s: vec![0.0; mode_cutoff] }
    }

    /// Arbitrary `s_n` with `c_n = √(1 + s_n²)`.
    pub fn from_s(s: Vec<f64>) -> Result<Self> {
        if s.iter().any(|x| !x.is_finite()) {
            return invalid("s_n must be finite");
        }
        let c = s.iter().map(|x| (1.0 + x * x).sqrt()).collect();
        Ok(Self { c, s })
    }

    /// Checked constructor requiring `c_n² − s_n² = 1` to 1e-12.
    pub fn new(c: Vec<f64>, s: Vec<f64>) -> Result<Self> {
        if c.len() != s.len() || c.is_empty() {
            return invalid("c and s must have equal, nonzero length");
        }
        for (n, (a, b)) in c.iter().zip(&s).enumerate() {
            if (a * a - b * b - 1.0).abs() > 1e-12 {
                return invalid(format!("c_{0}^2 - s_{0}^2 != 1", n + 1));
            }
        }
        Ok(Self { c, s })
    }

    /// No constraint on `c, s`; used for negative controls.
    pub fn unchecked(c: Vec<f64>, s: Vec<f64>) -> Self {
        assert_eq!(c.len(), s.len());
        Self { c, s }
    }

    pub fn mode_cutoff(&self) -> usize {
        self.c.len()
    }

    /// `c_{|n|}` (the coefficients are even in `n`).
    pub fn c(&self, n: i32) -> f64 {
        self.c[n.unsigned_abs() as usize - 1]
    }

    pub fn s(&self, n: i32) -> f64 {
        self.s[n.unsigned_abs() as usize - 1]
    }

    pub fn c_all(&self) -> &[f64] {
        &self.c
    }

    pub fn s_all(&self) -> &[f64] {
        &self.s
    }

    /// Largest deviation from `c_n² − s_n² = 1`.
    pub fn unitarity_defect(&self) -> f64 {
        self.c.iter().zip(&self.s).map(|(a, b)| (a * a - b * b - 1.0).abs()).fold(0.0, f64::max)
    }
}
