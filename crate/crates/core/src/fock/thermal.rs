//! Finite-temperature traces on one copy versus vacuum expectations on two copies.

use super::basis::FockBasis;
use super::ops::{apply_q, shift_winding, NormalPoly};
use super::vector::FockVector;
use super::RepCoeffs;
use crate::error::{invalid, Result};
use crate::report::{Check, Report};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// `A = R^u Q^v ∏_n β(−n)^{k_n} β(n)^{ℓ_n}`; `k[n−1]`, `l[n−1]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThermalMonomial {
    pub u: i32,
    pub v: u32,
    pub k: Vec<u32>,
    pub l: Vec<u32>,
}

impl ThermalMonomial {
    pub fn one() -> Self {
        Self { u: 0, v: 0, k: Vec::new(), l: Vec::new() }
    }

    /// `β(−n)^k β(n)^l` for a single mode.
    pub fn mode(n: usize, k: u32, l: u32) -> Self {
        let mut m = Self::one();
        m.k = vec![0; n];
        m.l = vec![0; n];
        m.k[n - 1] = k;
        m.l[n - 1] = l;
        m
    }

    pub fn times_mode(mut self, n: usize, k: u32, l: u32) -> Self {
        let len = self.k.len().max(n);
        self.k.resize(len, 0);
        self.l.resize(len, 0);
        self.k[n - 1] += k;
        self.l[n - 1] += l;
        self
    }

    pub fn with_zero_modes(mut self, u: i32, v: u32) -> Self {
        self.u = u;
        self.v = v;
        self
    }

    pub fn max_mode(&self) -> usize {
        (0..self.k.len()).rev().find(|&i| self.k[i] + self.l[i] > 0).map_or(0, |i| i + 1)
    }

    pub fn degree(&self) -> u32 {
        self.k.iter().chain(&self.l).sum()
    }

    pub fn label(&self) -> String {
        let mut s = String::new();
        if self.u != 0 {
            s += &format!("R^{} ", self.u);
        }
        if self.v != 0 {
            s += &format!("Q^{} ", self.v);
        }
        for n in 0..self.k.len() {
            if self.k[n] > 0 {
                s += &format!("b(-{})^{} ", n + 1, self.k[n]);
            }
            if self.l[n] > 0 {
                s += &format!("b({})^{} ", n + 1, self.l[n]);
            }
        }
        if s.is_empty() {
            "1".into()
        } else {
            s.trim_end().into()
        }
    }
}

/// Winding weight `e^{−βaw²/2}`: finite `a`, or `a → ∞` (only `w = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ThermalA {
    Finite(f64),
    Infinite,
}

/// Thermal expectation from the truncated trace and from the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalValue {
    /// `Tr(e^{−βH₀}A₀)/𝒵` summed over occupations `≤ m_max`.
    pub trace: f64,
    /// `δ_{u0}⟨w^v⟩ ∏ δ_{kℓ} k! n^k (x/(1−x))^k`, `x = e^{−βn}`.
    pub closed_form: f64,
    /// The same with `(1/(1−x))^k`, i.e. `c_n^{2k}` in place of `s_n^{2k}`.
    pub closed_form_c_variant: f64,
}

fn zero_mode_average(u: i32, v: u32, beta: f64, a: ThermalA) -> Result<f64> {
    if u != 0 {
        return Ok(0.0);
    }
    match a {
        ThermalA::Infinite => Ok(if v == 0 { 1.0 } else { 0.0 }),
        ThermalA::Finite(a) => {
            if !(a > 0.0) {
                return invalid("winding weight a must be positive");
            }
            let (mut num, mut den) = (0.0, 0.0);
            for w in -10_000i64..=10_000 {
                let e = (-beta * a * (w * w) as f64 / 2.0).exp();
                if e == 0.0 && w > 0 {
                    break;
                }
                num += e * (w as f64).powi(v as i32);
                den += e;
            }
            Ok(num / den)
        }
    }
}

/// `⟨m| b(−n)^k b(n)^l |m⟩` built from ladder steps.
fn ladder_diag(m: u32, n: f64, k: u32, l: u32) -> f64 {
    if l > m {
        return 0.0;
    }
    let mut amp = 1.0;
    let mut occ = m;
    for _ in 0..l {
        amp *= (occ as f64 * n).sqrt();
        occ -= 1;
    }
    for _ in 0..k {
        amp *= ((occ + 1) as f64 * n).sqrt();
        occ += 1;
    }
    if occ == m {
        amp
    } else {
        0.0
    }
}

/// Thermal expectation of `A` with `q² = e^{−β}`, modes truncated at `m_max` quanta.
pub fn thermal_expectation(mono: &ThermalMonomial, beta: f64, a: ThermalA, m_max: u32) -> Result<ThermalValue> {
    if !(beta > 0.0) || !beta.is_finite() {
        return invalid("inverse temperature must be positive and finite");
    }
    let zm = zero_mode_average(mono.u, mono.v, beta, a)?;
    let mut trace = zm;
    let mut closed = zm;
    let mut closed_c = zm;
    for idx in 0..mono.k.len() {
        let (k, l) = (mono.k[idx], mono.l[idx]);
        if k == 0 && l == 0 {
            continue;
        }
        let n = (idx + 1) as f64;
        let x = (-beta * n).exp();
        let (mut num, mut den) = (0.0, 0.0);
        for m in 0..=m_max {
            let wgt = x.powi(m as i32);
            num += wgt * ladder_diag(m, n, k, l);
            den += wgt;
        }
        trace *= num / den;
        if k == l {
            let kf: f64 = (1..=k).map(|j| j as f64).product();
            closed *= kf * n.powi(k as i32) * (x / (1.0 - x)).powi(k as i32);
            closed_c *= kf * n.powi(k as i32) * (1.0 / (1.0 - x)).powi(k as i32);
        } else {
            closed = 0.0;
            closed_c = 0.0;
        }
    }
    Ok(ThermalValue { trace, closed_form: closed, closed_form_c_variant: closed_c })
}

/// `⟨Ω|π(A)Ω⟩` on the two-copy space, computed by applying the factors to `Ω`.
pub fn vacuum_expectation(mono: &ThermalMonomial, rep: &RepCoeffs) -> Result<Complex64> {
    let mc = mono.max_mode().max(1);
    if mc > rep.mode_cutoff() {
        return invalid("monomial uses modes beyond the representation cutoff");
    }
    let level: usize = (0..mono.k.len()).map(|i| (i + 1) * (mono.k[i] + mono.l[i]) as usize).sum();
    let basis = FockBasis::new(mc, level, mono.u.abs().max(1))?;
    let sub = RepCoeffs::unchecked(rep.c_all()[..mc].to_vec(), rep.s_all()[..mc].to_vec());
    let one = Complex64::new(1.0, 0.0);
    let single = |n: i32| {
        let mut p = NormalPoly::zero();
        p.add_beta_product(&sub, &[n], one);
        p
    };
    let omega = FockVector::vacuum(&basis);
    let mut v = omega.clone();
    for idx in (0..mono.k.len()).rev() {
        let n = (idx + 1) as i32;
        for _ in 0..mono.l[idx] {
            v = single(n).apply(&basis, &v);
        }
        for _ in 0..mono.k[idx] {
            v = single(-n).apply(&basis, &v);
        }
    }
    v = apply_q(&v, mono.v);
    v = shift_winding(&basis, 1, mono.u, &v);
    Ok(omega.inner(&v))
}

/// Compares truncated trace, closed form and `⟨Ω|π(A)Ω⟩` at `a → ∞`, `q = e^{−β/2}`.
pub fn thermal_identity_check(q: f64, monomials: &[ThermalMonomial], m_max: u32, tol: f64) -> Result<Report> {
    if !(q > 0.0 && q < 1.0) {
        return invalid("thermal check needs 0 < q < 1");
    }
    let beta = -2.0 * q.ln();
    let mc = monomials.iter().map(|m| m.max_mode()).max().unwrap_or(1).max(1);
    let rep = RepCoeffs::from_q(q, mc)?;
    let mut report = Report::new();
    for mono in monomials {
        let t = thermal_expectation(mono, beta, ThermalA::Infinite, m_max)?;
        let vac = vacuum_expectation(mono, &rep)?;
        let scale = t.closed_form.abs().max(1.0);
        let d1 = (t.trace - t.closed_form).abs() / scale;
        let d2 = (vac - Complex64::new(t.closed_form, 0.0)).norm() / scale;
        report.push(
            Check::new(format!("thermal[{}]", mono.label()), d1.max(d2), tol)
                .param("q", q)
                .param("m_max", m_max)
                .param("trace", t.trace)
                .param("closed_form", t.closed_form)
                .param("vacuum_re", vac.re)
                .param("vacuum_im", vac.im)
                .param("closed_form_c_variant", t.closed_form_c_variant),
        );
    }
    Ok(report)
}

/// All monomials with `k_n, ℓ_n` on modes `≤ max_mode` of total degree `≤ max_degree`,
/// combined with `u ∈ {0, 1}`, `v ∈ {0, 1}`.
pub fn monomial_family(max_mode: usize, max_degree: u32) -> Vec<ThermalMonomial> {
    let mut out = Vec::new();
    let slots = 2 * max_mode;
    let mut cur = vec![0u32; slots];
    fn rec(cur: &mut Vec<u32>, i: usize, left: u32, out: &mut Vec<Vec<u32>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur[i] = e;
            rec(cur, i + 1, left - e, out);
        }
        cur[i] = 0;
    }
    let mut exps = Vec::new();
    rec(&mut cur, 0, max_degree, &mut exps);
    for e in exps {
        let mono = ThermalMonomial { u: 0, v: 0, k: e[..max_mode].to_vec(), l: e[max_mode..].to_vec() };
        out.push(mono.clone());
        if mono.degree() <= 2 {
            out.push(mono.clone().with_zero_modes(1, 0));
            out.push(mono.with_zero_modes(0, 1));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let beta = 4f64.ln();
        let a = ThermalMonomial::mode(1, 1, 1);
        let t = thermal_expectation(&a, beta, ThermalA::Infinite, 40).unwrap();
        // ⟨β(−1)β(1)⟩ = s₁² = x/(1−x) with x = 1/4
        assert!((t.trace - 1.0 / 3.0).abs() < 1e-12);
        assert!((t.closed_form - 1.0 / 3.0).abs() < 1e-15);
        assert!((t.closed_form_c_variant - 4.0 / 3.0).abs() < 1e-15);
        let rep = RepCoeffs::from_q(0.5, 1).unwrap();
        assert!((vacuum_expectation(&a, &rep).unwrap().re - 1.0 / 3.0).abs() < 1e-14);
        let r = ThermalMonomial::one().with_zero_modes(1, 0);
        assert_eq!(thermal_expectation(&r, beta, ThermalA::Infinite, 10).unwrap().trace, 0.0);
        assert_eq!(vacuum_expectation(&r, &rep).unwrap(), Complex64::new(0.0, 0.0));
        let one = thermal_expectation(&ThermalMonomial::one(), beta, ThermalA::Infinite, 10).unwrap();
        assert_eq!((one.trace, one.closed_form), (1.0, 1.0));
        assert!(thermal_expectation(&one_mono(), -1.0, ThermalA::Infinite, 10).is_err());
    }

    fn one_mono() -> ThermalMonomial {
        ThermalMonomial::one()
    }

    #[test]
    fn reversed_order_gives_c_squared() {
        // β(1)β(−1) = β(−1)β(1) + 1, so its expectation is c₁²
        let rep = RepCoeffs::from_q(0.5, 1).unwrap();
        let omega_basis = FockBasis::new(1, 2, 1).unwrap();
        let om = FockVector::vacuum(&omega_basis);
        let one = Complex64::new(1.0, 0.0);
        let mut p = NormalPoly::zero();
        p.add_beta_product(&rep, &[-1], one);
        let mut q = NormalPoly::zero();
        q.add_beta_product(&rep, &[1], one);
        let v = q.apply(&omega_basis, &p.apply(&omega_basis, &om));
        assert!((om.inner(&v).re - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn finite_a_winding_average() {
        let q2 = ThermalMonomial::one().with_zero_modes(0, 2);
        let t = thermal_expectation(&q2, 1.0, ThermalA::Finite(0.5), 5).unwrap();
        let (mut n, mut d) = (0.0, 0.0);
        for w in -60i32..=60 {
            let e = (-0.25 * (w * w) as f64).exp();
            n += e * (w * w) as f64;
            d += e;
        }
        assert!((t.trace - n / d).abs() < 1e-12);
    }

    #[test]
    fn family_passes() {
        for q in [0.3, 0.5] {
            let fam = monomial_family(3, 4);
            let r = thermal_identity_check(q, &fam, 30, 1e-8).unwrap();
            assert!(r.pass(), "q={q} max={}", r.max_residual());
        }
    }
}
