//! States stored as dense oscillator blocks per occupied winding sector.

use super::basis::{FockBasis, FockState};
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::collections::BTreeMap;

/// A finitely supported Fock vector.
///
/// Each occupied winding sector `(w₁, w₂)` holds a dense block over the
/// oscillator configurations of its basis; unoccupied sectors are absent.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FockVector {
    pub(crate) blocks: BTreeMap<(i32, i32), Vec<Complex64>>,
}

impl FockVector {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn vacuum(basis: &FockBasis) -> Self {
        Self::basis_state(basis, 0, 0, 0)
    }

    /// Unit vector for oscillator configuration `osc` in sector `(w1, w2)`.
    pub fn basis_state(basis: &FockBasis, osc: usize, w1: i32, w2: i32) -> Self {
        let mut v = vec![Complex64::new(0.0, 0.0); basis.n_osc()];
        v[osc] = Complex64::new(1.0, 0.0);
        let mut blocks = BTreeMap::new();
        blocks.insert((w1, w2), v);
        Self { blocks }
    }

    pub fn from_state(basis: &FockBasis, state: &FockState) -> Result<Self> {
        match (basis.osc_index(state), basis.sector_index(state.w1, state.w2)) {
            (Some(i), Some(_)) => Ok(Self::basis_state(basis, i, state.w1, state.w2)),
            _ => Err(Error::OutsideBasis(format!("{state:?}"))),
        }
    }

    pub fn from_block(w1: i32, w2: i32, block: Vec<Complex64>) -> Self {
        let mut blocks = BTreeMap::new();
        blocks.insert((w1, w2), block);
        Self { blocks }
    }

    pub fn block(&self, w1: i32, w2: i32) -> Option<&[Complex64]> {
        self.blocks.get(&(w1, w2)).map(|b| b.as_slice())
    }

    pub fn sectors(&self) -> impl Iterator<Item = (&(i32, i32), &Vec<Complex64>)> {
        self.blocks.iter()
    }

    pub fn amplitude(&self, basis: &FockBasis, state: &FockState) -> Complex64 {
        match (self.blocks.get(&(state.w1, state.w2)), basis.osc_index(state)) {
            (Some(b), Some(i)) => b[i],
            _ => Complex64::new(0.0, 0.0),
        }
    }

    /// `⟨self, other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, a) in &self.blocks {
            if let Some(b) = other.blocks.get(k) {
                acc += a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>();
            }
        }
        acc
    }

    pub fn norm(&self) -> f64 {
        self.blocks.values().flatten().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, a: Complex64) -> Self {
        let blocks =
            self.blocks.iter().map(|(k, b)| (*k, b.iter().map(|x| x * a).collect())).collect();
        Self { blocks }
    }

    /// `self += a·other`.
    pub fn axpy(&mut self, a: Complex64, other: &Self) {
        for (k, b) in &other.blocks {
            let dst = self.blocks.entry(*k).or_insert_with(|| vec![Complex64::new(0.0, 0.0); b.len()]);
            for (d, x) in dst.iter_mut().zip(b) {
                *d += a * x;
            }
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(Complex64::new(-1.0, 0.0), other);
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(Complex64::new(1.0, 0.0), other);
        out
    }

    /// Flattened coefficients in the global basis order.
    pub fn to_dense(&self, basis: &FockBasis) -> Vec<Complex64> {
        let n = basis.n_osc();
        let mut out = vec![Complex64::new(0.0, 0.0); basis.dim()];
        for ((w1, w2), b) in &self.blocks {
            if let Some(sec) = basis.sector_index(*w1, *w2) {
                out[sec * n..(sec + 1) * n].copy_from_slice(b);
            }
        }
        out
    }

    pub fn from_dense(basis: &FockBasis, v: &[Complex64]) -> Self {
        let n = basis.n_osc();
        let mut blocks = BTreeMap::new();
        for sec in 0..basis.n_sectors() {
            let b = &v[sec * n..(sec + 1) * n];
            if b.iter().any(|x| *x != Complex64::new(0.0, 0.0)) {
                blocks.insert(basis.sector_windings(sec), b.to_vec());
            }
        }
        Self { blocks }
    }

    /// Nonzero entries as a sparse map.
    pub fn to_sparse(&self, basis: &FockBasis) -> BTreeMap<FockState, Complex64> {
        let mut out = BTreeMap::new();
        for ((w1, w2), b) in &self.blocks {
            for (i, x) in b.iter().enumerate() {
                if *x != Complex64::new(0.0, 0.0) {
                    out.insert(basis.osc_state(i, *w1, *w2), *x);
                }
            }
        }
        out
    }
}
