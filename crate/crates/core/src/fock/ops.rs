//! Normal-ordered boson polynomials, winding shifts and sparse operator matrices.

use super::basis::{slot, FockBasis};
use super::vector::FockVector;
use super::RepCoeffs;
use crate::error::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::{BTreeMap, HashMap};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A single ladder operator: `b_A(−n)` (create) or `b_A(n)` (annihilate) on a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ladder {
    pub slot: u16,
    pub create: bool,
}

#[derive(Debug, Clone, Copy)]
enum Factor {
    L(Ladder),
    Q,
}

/// One normal-ordered monomial `coeff · Q^q_pow · ∏ create · ∏ annihilate`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalTerm {
    pub coeff: Complex64,
    pub q_pow: u8,
    pub create: Vec<u16>,
    pub annihilate: Vec<u16>,
}

/// A polynomial in the two copies' modes and `Q`, kept in normal order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NormalPoly {
    terms: BTreeMap<(u8, Vec<u16>, Vec<u16>), Complex64>,
}

/// `π(β(n))` as a combination of ladder operators and `Q`.
fn beta_factors(rep: &RepCoeffs, n: i32) -> Vec<(f64, Factor)> {
    let mc = rep.mode_cutoff();
    if n == 0 {
        return vec![(1.0, Factor::Q)];
    }
    let k = n.unsigned_abs() as usize;
    if k > mc {
        return Vec::new();
    }
    let s1 = slot(1, k, mc) as u16;
    let s2 = slot(2, k, mc) as u16;
    // β(n) = c b₁(n) + s b₂(−n)
    vec![
        (rep.c(n), Factor::L(Ladder { slot: s1, create: n < 0 })),
        (rep.s(n), Factor::L(Ladder { slot: s2, create: n > 0 })),
    ]
}

impl NormalPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        let mut p = Self::zero();
        p.add_raw(Complex64::new(1.0, 0.0), 0, Vec::new(), Vec::new());
        p
    }

    pub(crate) fn single(coeff: Complex64, create: Vec<u16>, annihilate: Vec<u16>) -> Self {
        let mut p = Self::zero();
        p.add_raw(coeff, 0, create, annihilate);
        p
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = NormalTerm> + '_ {
        self.terms.iter().map(|((q, c, a), v)| NormalTerm {
            coeff: *v,
            q_pow: *q,
            create: c.clone(),
            annihilate: a.clone(),
        })
    }

    fn add_raw(&mut self, coeff: Complex64, q_pow: u8, mut create: Vec<u16>, mut annihilate: Vec<u16>) {
        if coeff == ZERO {
            return;
        }
        create.sort_unstable();
        annihilate.sort_unstable();
        *self.terms.entry((q_pow, create, annihilate)).or_insert(ZERO) += coeff;
    }

    /// Adds `coeff · :π(β(n₁)) ⋯ π(β(n_k)):`. Modes beyond the cutoff contribute zero.
    pub fn add_beta_product(&mut self, rep: &RepCoeffs, modes: &[i32], coeff: Complex64) {
        let mut partial: Vec<(f64, u8, Vec<u16>, Vec<u16>)> = vec![(1.0, 0, Vec::new(), Vec::new())];
        for &n in modes {
            let fs = beta_factors(rep, n);
            let mut next = Vec::with_capacity(partial.len() * fs.len());
            for (c, q, cr, an) in &partial {
                for (f, fac) in &fs {
                    if *f == 0.0 {
                        continue;
                    }
                    let (mut cr, mut an, mut q) = (cr.clone(), an.clone(), *q);
                    match fac {
                        Factor::Q => q += 1,
                        Factor::L(l) if l.create => cr.push(l.slot),
                        Factor::L(l) => an.push(l.slot),
                    }
                    next.push((c * f, q, cr, an));
                }
            }
            partial = next;
        }
        for (c, q, cr, an) in partial {
            self.add_raw(coeff * c, q, cr, an);
        }
    }

    /// Adds a single normal-ordered ladder monomial.
    pub fn add_ladders(&mut self, coeff: Complex64, q_pow: u8, ladders: &[Ladder]) {
        let cr = ladders.iter().filter(|l| l.create).map(|l| l.slot).collect();
        let an = ladders.iter().filter(|l| !l.create).map(|l| l.slot).collect();
        self.add_raw(coeff, q_pow, cr, an);
    }

    pub fn add(&mut self, other: &Self, scale: Complex64) {
        for ((q, c, a), v) in &other.terms {
            self.add_raw(scale * v, *q, c.clone(), a.clone());
        }
    }

    /// Drops terms with `|coeff| ≤ tol`.
    pub fn prune(&mut self, tol: f64) {
        self.terms.retain(|_, v| v.norm() > tol);
    }

    /// Applies the polynomial to a vector. Windings are unchanged.
    pub fn apply(&self, basis: &FockBasis, v: &FockVector) -> FockVector {
        let terms: Vec<NormalTerm> = self.terms().collect();
        let mut out = FockVector::zero();
        for ((w1, w2), blk) in v.sectors() {
            let res = apply_terms_block(basis, &terms, *w1, blk);
            out.blocks.insert((*w1, *w2), res);
        }
        out
    }
}

/// Result of one normal-ordered monomial on configuration `i`: target and real factor.
#[inline]
pub(crate) fn monomial_on(basis: &FockBasis, create: &[u16], annihilate: &[u16], i: usize) -> Option<(usize, f64)> {
    let mc = basis.mode_cutoff();
    let mut idx = i;
    let mut f = 1.0;
    for &s in annihilate {
        let s = s as usize;
        let m = basis.occupation(idx, s);
        if m == 0 {
            return None;
        }
        f *= ((m as usize * (s % mc + 1)) as f64).sqrt();
        idx = basis.lower(idx, s)?;
    }
    for &s in create {
        let s = s as usize;
        let m = basis.occupation(idx, s);
        idx = basis.raise(idx, s)?;
        f *= (((m as usize + 1) * (s % mc + 1)) as f64).sqrt();
    }
    Some((idx, f))
}

fn apply_terms_block(basis: &FockBasis, terms: &[NormalTerm], w1: i32, blk: &[Complex64]) -> Vec<Complex64> {
    let n = blk.len();
    let wq: Vec<Complex64> = terms.iter().map(|t| t.coeff * (w1 as f64).powi(t.q_pow as i32)).collect();
    (0..n)
        .into_par_iter()
        .with_min_len(2048)
        .fold(
            || vec![ZERO; n],
            |mut acc, i| {
                let x = blk[i];
                if x != ZERO {
                    for (t, c) in terms.iter().zip(&wq) {
                        if *c == ZERO {
                            continue;
                        }
                        if let Some((j, f)) = monomial_on(basis, &t.create, &t.annihilate, i) {
                            acc[j] += c * f * x;
                        }
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![ZERO; n],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

/// `R_A^{dw}` on a vector; components leaving `|w| ≤ W` are dropped.
pub fn shift_winding(basis: &FockBasis, copy: u8, dw: i32, v: &FockVector) -> FockVector {
    let mut out = FockVector::zero();
    for ((w1, w2), blk) in v.sectors() {
        let (a, b) = if copy == 1 { (w1 + dw, *w2) } else { (*w1, w2 + dw) };
        if basis.sector_index(a, b).is_some() {
            out.blocks.insert((a, b), blk.clone());
        }
    }
    out
}

/// `Q^k` on a vector.
pub fn apply_q(v: &FockVector, k: u32) -> FockVector {
    let mut out = FockVector::zero();
    for ((w1, w2), blk) in v.sectors() {
        let f = (*w1 as f64).powi(k as i32);
        out.blocks.insert((*w1, *w2), blk.iter().map(|x| x * f).collect());
    }
    out
}

/// Sparse complex matrix over the enumerated basis (CSR).
#[derive(Debug, Clone)]
pub struct FockOperator {
    pub name: String,
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<Complex64>,
}

impl FockOperator {
    /// Builds the matrix column by column from the image of each basis vector.
    pub fn from_columns<F>(basis: &FockBasis, name: impl Into<String>, col: F) -> Result<Self>
    where
        F: Fn(usize) -> Vec<(usize, Complex64)> + Sync,
    {
        let dim = basis.dim();
        if dim > super::OPERATOR_CAP {
            return Err(Error::BasisTooLarge { size: dim, cap: super::OPERATOR_CAP });
        }
        let columns: Vec<Vec<(usize, Complex64)>> = (0..dim).into_par_iter().map(&col).collect();
        let mut triplets: Vec<(usize, u32, Complex64)> = Vec::new();
        for (j, c) in columns.into_iter().enumerate() {
            for (i, v) in c {
                if v != ZERO {
                    triplets.push((i, j as u32, v));
                }
            }
        }
        Ok(Self::from_triplets(name.into(), dim, triplets))
    }

    fn from_triplets(name: String, dim: usize, mut triplets: Vec<(usize, u32, Complex64)>) -> Self {
        triplets.sort_unstable_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, u32)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            row_ptr[i + 1] += 1;
            cols.push(j);
            vals.push(v);
            last = Some((i, j));
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { name, dim, row_ptr, cols, vals }
    }

    /// Matrix of a normal-ordered polynomial.
    pub fn from_poly(basis: &FockBasis, name: impl Into<String>, poly: &NormalPoly) -> Result<Self> {
        let terms: Vec<NormalTerm> = poly.terms().collect();
        let n = basis.n_osc();
        Self::from_columns(basis, name, |g| {
            let (w1, _) = basis.sector_windings(g / n);
            let base = g - g % n;
            let mut out = Vec::new();
            for t in &terms {
                if let Some((j, f)) = monomial_on(basis, &t.create, &t.annihilate, g % n) {
                    out.push((base + j, t.coeff * f * (w1 as f64).powi(t.q_pow as i32)));
                }
            }
            out
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        let r = &self.cols[self.row_ptr[row]..self.row_ptr[row + 1]];
        match r.binary_search(&(col as u32)) {
            Ok(k) => self.vals[self.row_ptr[row] + k],
            Err(_) => ZERO,
        }
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .into_par_iter()
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .map(|k| self.vals[k] * x[self.cols[k] as usize])
                    .sum()
            })
            .collect()
    }

    pub fn apply(&self, basis: &FockBasis, v: &FockVector) -> FockVector {
        FockVector::from_dense(basis, &self.matvec(&v.to_dense(basis)))
    }

    pub fn adjoint(&self) -> Self {
        let mut triplets = Vec::with_capacity(self.nnz());
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                triplets.push((self.cols[k] as usize, i as u32, self.vals[k].conj()));
            }
        }
        Self::from_triplets(format!("{}^*", self.name), self.dim, triplets)
    }

    /// Largest entry of `|self − other|`.
    pub fn max_diff(&self, other: &Self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m = m.max((self.vals[k] - other.get(i, self.cols[k] as usize)).norm());
            }
            for k in other.row_ptr[i]..other.row_ptr[i + 1] {
                m = m.max((other.vals[k] - self.get(i, other.cols[k] as usize)).norm());
            }
        }
        m
    }
}

/// Matrices of the generators on a small basis.
#[derive(Debug, Clone)]
pub struct ModeOps {
    /// `b_A(n)` keyed by `(A, n)`, `n ∈ ±1..=M`.
    pub b: HashMap<(u8, i32), FockOperator>,
    pub q: FockOperator,
    /// `R_A^{±1}` keyed by `(A, ±1)`.
    pub r: HashMap<(u8, i32), FockOperator>,
    /// `π(β(n))` for `n ∈ −M..=M`.
    pub beta: HashMap<i32, FockOperator>,
}

/// Builds the generator matrices for `basis` under the representation `rep`.
pub fn mode_ops(basis: &FockBasis, rep: &RepCoeffs) -> Result<ModeOps> {
    let mc = basis.mode_cutoff() as i32;
    let mut b = HashMap::new();
    for a in 1..=2u8 {
        for n in (-mc..=mc).filter(|n| *n != 0) {
            let l = Ladder { slot: slot(a, n.unsigned_abs() as usize, mc as usize) as u16, create: n < 0 };
            let mut p = NormalPoly::zero();
            p.add_ladders(Complex64::new(1.0, 0.0), 0, &[l]);
            b.insert((a, n), FockOperator::from_poly(basis, format!("b{a}({n})"), &p)?);
        }
    }
    let mut qp = NormalPoly::zero();
    qp.add_ladders(Complex64::new(1.0, 0.0), 1, &[]);
    let q = FockOperator::from_poly(basis, "Q", &qp)?;
    let n = basis.n_osc();
    let mut r = HashMap::new();
    for a in 1..=2u8 {
        for dw in [-1, 1] {
            let op = FockOperator::from_columns(basis, format!("R{a}^{dw}"), |g| {
                let (w1, w2) = basis.sector_windings(g / n);
                let (t1, t2) = if a == 1 { (w1 + dw, w2) } else { (w1, w2 + dw) };
                match basis.sector_index(t1, t2) {
                    Some(sec) => vec![(sec * n + g % n, Complex64::new(1.0, 0.0))],
                    None => Vec::new(),
                }
            })?;
            r.insert((a, dw), op);
        }
    }
    let mut beta = HashMap::new();
    for k in -mc..=mc {
        let mut p = NormalPoly::zero();
        p.add_beta_product(rep, &[k], Complex64::new(1.0, 0.0));
        beta.insert(k, FockOperator::from_poly(basis, format!("beta({k})"), &p)?);
    }
    Ok(ModeOps { b, q, r, beta })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn comm_on(a: &FockOperator, b: &FockOperator, x: &[Complex64]) -> Vec<Complex64> {
        let ab = a.matvec(&b.matvec(x));
        let ba = b.matvec(&a.matvec(x));
        ab.iter().zip(&ba).map(|(p, q)| p - q).collect()
    }

    #[test]
    fn ccr_on_interior_states() {
        let basis = FockBasis::new(3, 9, 1).unwrap();
        let rep = RepCoeffs::from_q(0.4, 3).unwrap();
        let ops = mode_ops(&basis, &rep).unwrap();
        let n = basis.n_osc();
        // two factors of level change ≤ M each stay below the edge
        let interior: Vec<usize> = basis.low_levels(9 - 6);
        for m in -3..=3i32 {
            for k in -3..=3i32 {
                for &i in interior.iter().step_by(3) {
                    let g = 4 * n + i;
                    let mut x = vec![ZERO; basis.dim()];
                    x[g] = Complex64::new(1.0, 0.0);
                    let c = comm_on(&ops.beta[&m], &ops.beta[&k], &x);
                    let expect = if m == -k { m as f64 } else { 0.0 };
                    for (j, v) in c.iter().enumerate() {
                        let e = if j == g { expect } else { 0.0 };
                        assert!((v - e).norm() < 1e-12, "m={m} k={k}");
                    }
                }
            }
        }
        // [b₁(1), b₁(−1)] = 1 below the edge
        let x: Vec<Complex64> = (0..basis.dim())
            .map(|g| if basis.level(g % n) <= 8 { Complex64::new(1.0, g as f64) } else { ZERO })
            .collect();
        let c = comm_on(&ops.b[&(1, 1)], &ops.b[&(1, -1)], &x);
        for (a, b) in c.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn highest_weight_and_windings() {
        let basis = FockBasis::new(2, 4, 2).unwrap();
        let rep = RepCoeffs::from_q(0.3, 2).unwrap();
        let ops = mode_ops(&basis, &rep).unwrap();
        let omega = FockVector::vacuum(&basis).to_dense(&basis);
        for a in 1..=2u8 {
            for n in 1..=2 {
                assert!(ops.b[&(a, n)].matvec(&omega).iter().all(|x| *x == ZERO));
            }
        }
        assert!(ops.q.matvec(&omega).iter().all(|x| *x == ZERO));
        let mut v = omega.clone();
        for w in 0..=2 {
            assert_eq!(v.iter().zip(&omega).map(|(a, b)| a.conj() * b).sum::<Complex64>().re, if w == 0 { 1.0 } else { 0.0 });
            v = ops.r[&(1, 1)].matvec(&v);
        }
        // [Q, R₁] = R₁ away from the clip
        let g = basis.index_of(&basis.osc_state(5, 0, 1)).unwrap();
        let mut x = vec![ZERO; basis.dim()];
        x[g] = Complex64::new(1.0, 0.0);
        let c = comm_on(&ops.q, &ops.r[&(1, 1)], &x);
        let rx = ops.r[&(1, 1)].matvec(&x);
        assert!(c.iter().zip(&rx).all(|(a, b)| (a - b).norm() < 1e-15));
    }

    #[test]
    fn adjoint_relations() {
        let basis = FockBasis::new(2, 5, 1).unwrap();
        let rep = RepCoeffs::from_q(0.5, 2).unwrap();
        let ops = mode_ops(&basis, &rep).unwrap();
        for a in 1..=2u8 {
            for n in 1..=2 {
                assert_eq!(ops.b[&(a, n)].adjoint().max_diff(&ops.b[&(a, -n)]), 0.0);
            }
            assert_eq!(ops.r[&(a, 1)].adjoint().max_diff(&ops.r[&(a, -1)]), 0.0);
        }
        for k in -2..=2 {
            assert!(ops.beta[&k].adjoint().max_diff(&ops.beta[&-k]) < 1e-15);
        }
    }

    #[test]
    fn poly_apply_matches_matrix() {
        let basis = FockBasis::new(3, 6, 1).unwrap();
        let rep = RepCoeffs::from_q(0.35, 3).unwrap();
        let mut p = NormalPoly::zero();
        p.add_beta_product(&rep, &[1, -2, 1], Complex64::new(0.5, 0.1));
        p.add_beta_product(&rep, &[0, 3, -3], Complex64::new(-1.0, 0.0));
        let op = FockOperator::from_poly(&basis, "p", &p).unwrap();
        let mut v = FockVector::basis_state(&basis, 7, 1, 0);
        v.axpy(Complex64::new(0.2, -0.3), &FockVector::basis_state(&basis, 2, 0, 0));
        let a = p.apply(&basis, &v);
        let b = op.apply(&basis, &v);
        assert!(a.sub(&b).norm() < 1e-14);
        assert!(a.norm() > 0.1);
    }

    #[test]
    fn normal_product_is_symmetric() {
        let rep = RepCoeffs::from_q(0.2, 3).unwrap();
        let mut a = NormalPoly::zero();
        a.add_beta_product(&rep, &[2, -1, -1], Complex64::new(1.0, 0.0));
        let mut b = NormalPoly::zero();
        b.add_beta_product(&rep, &[-1, 2, -1], Complex64::new(1.0, 0.0));
        a.add(&b, Complex64::new(-1.0, 0.0));
        a.prune(1e-15);
        assert!(a.is_empty());
    }
}
