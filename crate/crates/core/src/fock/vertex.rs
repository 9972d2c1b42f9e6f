//! Normal-ordered vertex operators `:R^w e^{iJ(α)}:` with `J(α) = Σ α_n β(−n)`.
//!
//! Factorized as `e^{iα₀Q/2} R^w e^{iα₀Q/2} e^{iJ⁺(α)} e^{iJ⁻(α)}` with
//! `J⁺ = Σ_{n>0} (α_n c_n b₁(−n) + α_{−n} s_n b₂(−n))` and
//! `J⁻ = Σ_{n>0} (α_{−n} c_n b₁(n) + α_n s_n b₂(n))`.

use super::basis::{slot, FockBasis, FockState};
use super::ops::NormalPoly;
use super::vector::FockVector;
use super::RepCoeffs;
use crate::error::{invalid, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Winding `w` and coefficients `α_n`, `n ∈ −M..=M` (`α₀` multiplies `Q`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexSpec {
    pub w: i32,
    alpha: Vec<Complex64>,
}

impl VertexSpec {
    pub fn identity(mode_cutoff: usize) -> Self {
        Self { w: 0, alpha: vec![ZERO; 2 * mode_cutoff + 1] }
    }

    pub fn new(mode_cutoff: usize, w: i32) -> Self {
        Self { w, ..Self::identity(mode_cutoff) }
    }

    pub fn mode_cutoff(&self) -> usize {
        (self.alpha.len() - 1) / 2
    }

    pub fn alpha(&self, n: i32) -> Complex64 {
        let m = self.mode_cutoff() as i32;
        if n.abs() > m {
            ZERO
        } else {
            self.alpha[(n + m) as usize]
        }
    }

    pub fn alpha0(&self) -> Complex64 {
        self.alpha(0)
    }

    pub fn set_alpha(&mut self, n: i32, a: Complex64) -> Result<()> {
        let m = self.mode_cutoff() as i32;
        if n.abs() > m {
            return invalid(format!("mode {n} outside cutoff {m}"));
        }
        self.alpha[(n + m) as usize] = a;
        Ok(())
    }

    pub fn with_alpha(mut self, n: i32, a: Complex64) -> Self {
        self.set_alpha(n, a).expect("mode within cutoff");
        self
    }

    /// Spec of the adjoint: `w ↦ −w`, `α_n ↦ −conj(α_{−n})`.
    pub fn adjoint(&self) -> Self {
        let m = self.mode_cutoff() as i32;
        let alpha = (-m..=m).map(|n| -self.alpha(-n).conj()).collect();
        Self { w: -self.w, alpha }
    }

    /// Spec of `:Φ(α)Φ(β):`, i.e. `α + β` and `w + w′`.
    pub fn combine(&self, other: &Self) -> Self {
        assert_eq!(self.mode_cutoff(), other.mode_cutoff());
        let alpha = self.alpha.iter().zip(&other.alpha).map(|(a, b)| a + b).collect();
        Self { w: self.w + other.w, alpha }
    }

    /// `[J⁻(α), J⁺(β)] = Σ_{n>0} n (c_n² α_{−n} β_n + s_n² α_n β_{−n})`.
    pub fn jm_jp(&self, other: &Self, rep: &RepCoeffs) -> Complex64 {
        let m = self.mode_cutoff().min(rep.mode_cutoff()) as i32;
        (1..=m)
            .map(|n| {
                let (c, s) = (rep.c(n), rep.s(n));
                (self.alpha(-n) * other.alpha(n) * (c * c) + self.alpha(n) * other.alpha(-n) * (s * s))
                    * n as f64
            })
            .sum()
    }

    /// Slots and coefficients `a` of the factors `e^{a b(−n)}` in `e^{iJ⁺}`.
    fn creation(&self, rep: &RepCoeffs) -> Vec<(usize, Complex64)> {
        let mc = rep.mode_cutoff();
        let mut out = Vec::new();
        for n in 1..=self.mode_cutoff().min(mc) as i32 {
            let k = n as usize;
            out.push((slot(1, k, mc), I * self.alpha(n) * rep.c(n)));
            out.push((slot(2, k, mc), I * self.alpha(-n) * rep.s(n)));
        }
        out.retain(|(_, a)| *a != ZERO);
        out
    }

    /// Slots and coefficients of the factors `e^{a b(n)}` in `e^{iJ⁻}`.
    fn annihilation(&self, rep: &RepCoeffs) -> Vec<(usize, Complex64)> {
        let mc = rep.mode_cutoff();
        let mut out = Vec::new();
        for n in 1..=self.mode_cutoff().min(mc) as i32 {
            let k = n as usize;
            out.push((slot(1, k, mc), I * self.alpha(-n) * rep.c(n)));
            out.push((slot(2, k, mc), I * self.alpha(n) * rep.s(n)));
        }
        out.retain(|(_, a)| *a != ZERO);
        out
    }

    /// Zero-mode phase on winding sector `w₁`: `e^{iα₀(w₁ + w/2)}`.
    pub fn zero_mode_phase(&self, w1: i32) -> Complex64 {
        (I * self.alpha0() * (w1 as f64 + self.w as f64 / 2.0)).exp()
    }
}

/// `e^{a b(±n)}` on a dense block, one slot, in gather form.
fn slot_pass(basis: &FockBasis, v: &[Complex64], s: usize, a: Complex64, create: bool) -> Vec<Complex64> {
    let nmode = (s % basis.mode_cutoff() + 1) as f64;
    let mut out = vec![ZERO; v.len()];
    out.par_iter_mut().with_min_len(1024).enumerate().for_each(|(j, o)| {
        let mj = basis.occupation(j, s) as f64;
        let mut acc = v[j];
        let mut coef = Complex64::new(1.0, 0.0);
        let mut idx = j;
        let mut k = 1.0;
        if create {
            // sources have occupation m_j − k
            while let Some(src) = basis.lower(idx, s) {
                coef *= a * (nmode * (mj - k + 1.0)).sqrt() / k;
                acc += coef * v[src];
                idx = src;
                k += 1.0;
            }
        } else {
            // sources have occupation m_j + k
            while let Some(src) = basis.raise(idx, s) {
                coef *= a * (nmode * (mj + k)).sqrt() / k;
                acc += coef * v[src];
                idx = src;
                k += 1.0;
            }
        }
        *o = acc;
    });
    out
}

/// `:R^w e^{iJ(α)}: v`, exact on every retained component.
///
/// Creation factors only raise the level, so components at level `≤ L` are
/// unaffected by the truncation; the winding shift is clipped at `|w₁| ≤ W`.
pub fn apply_vertex(basis: &FockBasis, spec: &VertexSpec, rep: &RepCoeffs, v: &FockVector) -> FockVector {
    let ann = spec.annihilation(rep);
    let cre = spec.creation(rep);
    let mut out = FockVector::zero();
    for ((w1, w2), blk) in v.sectors() {
        let t1 = w1 + spec.w;
        if basis.sector_index(t1, *w2).is_none() {
            continue;
        }
        let mut x = blk.clone();
        for (s, a) in &ann {
            x = slot_pass(basis, &x, *s, *a, false);
        }
        for (s, a) in &cre {
            x = slot_pass(basis, &x, *s, *a, true);
        }
        let ph = spec.zero_mode_phase(*w1);
        x.iter_mut().for_each(|z| *z *= ph);
        match out.blocks.get_mut(&(t1, *w2)) {
            Some(dst) => dst.iter_mut().zip(&x).for_each(|(d, z)| *d += z),
            None => {
                out.blocks.insert((t1, *w2), x);
            }
        }
    }
    out
}

/// `:Φ X: v` for a normal-ordered mode polynomial `X` without `Q` factors:
/// creation parts of `X` stand left of `Φ`, annihilation parts right of it.
pub fn apply_insertion(
    basis: &FockBasis,
    spec: &VertexSpec,
    rep: &RepCoeffs,
    x: &NormalPoly,
    v: &FockVector,
) -> Result<FockVector> {
    let mut by_ann: BTreeMap<Vec<u16>, Vec<(Complex64, Vec<u16>)>> = BTreeMap::new();
    for t in x.terms() {
        if t.q_pow != 0 {
            return invalid("insertion polynomial must not contain Q");
        }
        by_ann.entry(t.annihilate).or_default().push((t.coeff, t.create));
    }
    let mut out = FockVector::zero();
    for (ann, group) in by_ann {
        let lowered = NormalPoly::single(Complex64::new(1.0, 0.0), Vec::new(), ann).apply(basis, v);
        let phi = apply_vertex(basis, spec, rep, &lowered);
        let mut cre = NormalPoly::zero();
        for (c, cr) in group {
            cre.add(&NormalPoly::single(c, cr, Vec::new()), Complex64::new(1.0, 0.0));
        }
        out.axpy(Complex64::new(1.0, 0.0), &cre.apply(basis, &phi));
    }
    Ok(out)
}

/// `:Φ X: v` computed as `X̃ Φ v`, where `X̃` replaces each annihilator `b` in `X`
/// by `b − i[b, J⁺]`.
///
/// One vertex application instead of one per annihilation pattern; components
/// within the annihilated level of the cutoff `L` miss their sources above `L`.
pub fn apply_insertion_commuted(
    basis: &FockBasis,
    spec: &VertexSpec,
    rep: &RepCoeffs,
    x: &NormalPoly,
    v: &FockVector,
) -> Result<FockVector> {
    let mc = rep.mode_cutoff();
    let shift: BTreeMap<u16, Complex64> = spec
        .creation(rep)
        .into_iter()
        .map(|(s, a)| (s as u16, a * (s % mc + 1) as f64))
        .collect();
    let mut xt = NormalPoly::zero();
    for t in x.terms() {
        if t.q_pow != 0 {
            return invalid("insertion polynomial must not contain Q");
        }
        let mut parts: Vec<(Complex64, Vec<u16>)> = vec![(t.coeff, Vec::new())];
        for s in &t.annihilate {
            let g = shift.get(s).copied().unwrap_or(ZERO);
            let mut next = Vec::with_capacity(2 * parts.len());
            for (c, an) in parts {
                if g != ZERO {
                    next.push((-c * g, an.clone()));
                }
                let mut an = an;
                an.push(*s);
                next.push((c, an));
            }
            parts = next;
        }
        for (c, an) in parts {
            xt.add(&NormalPoly::single(c, t.create.clone(), an), Complex64::new(1.0, 0.0));
        }
    }
    Ok(xt.apply(basis, &apply_vertex(basis, spec, rep, v)))
}

/// `⟨m′| e^{a⁺ b(−n)} e^{a⁻ b(n)} |m⟩` for one mode, summed over the finite intermediate range.
fn slot_element(mp: u32, m: u32, n: f64, ap: Complex64, am: Complex64) -> Complex64 {
    let mut acc = ZERO;
    for k in 0..=mp.min(m) {
        let up = mp - k;
        let dn = m - k;
        // √(m!/k!) and √(m′!/k!)
        let r_dn: f64 = (k + 1..=m).map(|j| (j as f64).sqrt()).product();
        let r_up: f64 = (k + 1..=mp).map(|j| (j as f64).sqrt()).product();
        let f_up: f64 = (1..=up).map(|j| j as f64).product();
        let f_dn: f64 = (1..=dn).map(|j| j as f64).product();
        let b = am.powi(dn as i32) * (n.powi(dn as i32).sqrt() * r_dn / f_dn);
        let a = ap.powi(up as i32) * (n.powi(up as i32).sqrt() * r_up / f_up);
        acc += a * b;
    }
    acc
}

/// `⟨bra| :R^w e^{iJ(α)}: |ket⟩`, exact: each mode contributes a finite sum.
pub fn vertex_matrix_element(bra: &FockState, spec: &VertexSpec, ket: &FockState, rep: &RepCoeffs) -> Complex64 {
    if bra.w1 != ket.w1 + spec.w || bra.w2 != ket.w2 || bra.m.len() != ket.m.len() {
        return ZERO;
    }
    let mc = rep.mode_cutoff();
    assert_eq!(bra.m.len(), 2 * mc, "state and representation cutoffs differ");
    let mut cre = vec![ZERO; 2 * mc];
    let mut ann = vec![ZERO; 2 * mc];
    for (s, a) in spec.creation(rep) {
        cre[s] = a;
    }
    for (s, a) in spec.annihilation(rep) {
        ann[s] = a;
    }
    let mut out = spec.zero_mode_phase(ket.w1);
    for s in 0..2 * mc {
        let n = (s % mc + 1) as f64;
        out *= slot_element(bra.m[s], ket.m[s], n, cre[s], ann[s]);
        if out == ZERO {
            break;
        }
    }
    out
}
