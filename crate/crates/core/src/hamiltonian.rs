//! The second-quantized Hamiltonian `ℋ` on the truncated Fock space and the
//! commutator identities relating it to the regularized many-body operator.
//!
//! `ℋ = νW³ + (1−ν²)𝒞 + 2ν(ν−1)W²Q + ⅓ν(ν−1)²(2+ν)Q³ − ν⁴c_εQ`, with
//! `W² = ½Σ :β(−n)β(n):`, `W³ = ⅓Σ :β(−m)β(−n)β(m+n):` and
//! `𝒞 = Σ n(b₁(−n)b₁(n) + b₂(−n)b₂(n))`.

use crate::anyons::{anyon_to_vertex, AnyonSpec};
use crate::elliptic::EllipticParams;
use crate::error::{invalid, Error, Result};
use crate::fock::{
    apply_insertion, apply_insertion_commuted, apply_q, apply_vertex, slot, FockBasis, FockOperator, FockVector, Ladder, NormalPoly,
    RepCoeffs, VertexSpec, OPERATOR_CAP,
};
use crate::numerics::exp_diff_over_eps;
use crate::report::{Check, Report};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Particle number and coupling of the many-body operator `H_N^ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcsOperatorSpec {
    pub n: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub eps: f64,
}

impl EcsOperatorSpec {
    pub fn new(n: usize, lambda: f64, eps: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return invalid(format!("lambda must be positive, got {lambda}"));
        }
        if !(eps >= 0.0) {
            return invalid(format!("eps must be non-negative, got {eps}"));
        }
        Ok(Self { n, lambda, gamma: 2.0 * lambda * (lambda - 1.0), eps })
    }

    pub fn validate(&self) -> Result<()> {
        let g = 2.0 * self.lambda * (self.lambda - 1.0);
        if (g - self.gamma).abs() > 1e-14 * g.abs().max(1.0) {
            return invalid("gamma != 2 lambda (lambda - 1)");
        }
        Ok(())
    }
}

/// Matrices of the building blocks, present when the basis is small enough.
#[derive(Debug, Clone)]
pub struct HamiltonianOperators {
    pub w2: FockOperator,
    pub w3: FockOperator,
    pub calc: FockOperator,
    pub q: FockOperator,
    pub h: FockOperator,
}

/// `W², W³, 𝒞, ℋ` as normal-ordered polynomials plus the constant `c_ε`.
#[derive(Debug, Clone)]
pub struct HamiltonianBundle {
    pub w2: NormalPoly,
    pub w3: NormalPoly,
    pub calc: NormalPoly,
    pub h: NormalPoly,
    pub c_eps: f64,
    /// Bound on the omitted part of the `c_ε` double sum.
    pub c_eps_tail: f64,
    pub params: EllipticParams,
    pub rep: RepCoeffs,
    pub ops: Option<HamiltonianOperators>,
}

/// `c_ε` from the coefficients `s_n`, with the double sum cut at `m, n ≤ 4M`.
///
/// Returns the value and a bound on the neglected tail.
pub fn c_eps_from_rep(rep: &RepCoeffs, eps: f64, q: f64) -> (f64, f64) {
    let m = rep.mode_cutoff();
    let cut = 4 * m;
    // s_n² beyond the stored coefficients uses the thermal form when q > 0
    let s2 = |n: usize| -> f64 {
        if n <= m {
            rep.s(n as i32).powi(2)
        } else if q > 0.0 {
            let t = q.powi(2 * n as i32);
            t / (1.0 - t)
        } else {
            0.0
        }
    };
    let s2v: Vec<f64> = (1..=cut).map(s2).collect();
    let mut c = 1.0 / 12.0;
    for n in 1..=cut {
        c -= 2.0 * n as f64 * s2v[n - 1] * (-2.0 * n as f64 * eps).exp();
    }
    for a in 1..=cut {
        for b in 1..=cut {
            let (af, bf) = (a as f64, b as f64);
            let d = ((-((a as f64 - bf).abs()) * eps).exp() - (-(af + bf) * eps).exp()).max(0.0);
            c -= 2.0 * s2v[a - 1] * s2v[b - 1] * (-(af + bf) * eps).exp() * d;
        }
    }
    let s_last = s2v[cut - 1];
    let tail = if s_last == 0.0 { 0.0 } else { 4.0 * cut as f64 * s_last * (-2.0 * cut as f64 * eps).exp() };
    (c, tail)
}

/// `W² = ½ Σ_{|n|≤M} :β(−n)β(n):`.
pub fn w2_poly(rep: &RepCoeffs) -> NormalPoly {
    let m = rep.mode_cutoff() as i32;
    let mut p = NormalPoly::zero();
    for n in -m..=m {
        p.add_beta_product(rep, &[-n, n], re(0.5));
    }
    p.prune(0.0);
    p
}

/// `W³ = ⅓ Σ :β(−m)β(−n)β(m+n):` over `|m|, |n|, |m+n| ≤ M`.
pub fn w3_poly(rep: &RepCoeffs) -> NormalPoly {
    let mc = rep.mode_cutoff() as i32;
    let mut p = NormalPoly::zero();
    for m in -mc..=mc {
        for n in -mc..=mc {
            if (m + n).abs() <= mc {
                p.add_beta_product(rep, &[-m, -n, m + n], re(1.0 / 3.0));
            }
        }
    }
    p.prune(1e-300);
    p
}

/// Terms of `W³` made of creation operators only.
pub fn w3_creation_part(w3: &NormalPoly) -> NormalPoly {
    let mut p = NormalPoly::zero();
    for t in w3.terms().filter(|t| t.q_pow == 0 && t.annihilate.is_empty()) {
        let ladders: Vec<Ladder> = t.create.iter().map(|&s| Ladder { slot: s, create: true }).collect();
        p.add_ladders(t.coeff, 0, &ladders);
    }
    p
}

/// `𝒞 = Σ_{n=1}^M n (b₁(−n)b₁(n) + b₂(−n)b₂(n))`.
pub fn calc_poly(mode_cutoff: usize) -> NormalPoly {
    let mut p = NormalPoly::zero();
    for a in 1..=2u8 {
        for n in 1..=mode_cutoff {
            let s = slot(a, n, mode_cutoff) as u16;
            p.add_ladders(re(n as f64), 0, &[Ladder { slot: s, create: true }, Ladder { slot: s, create: false }]);
        }
    }
    p
}

fn q_power(k: u8) -> NormalPoly {
    let mut p = NormalPoly::zero();
    p.add_ladders(ONE, k, &[]);
    p
}

/// `P·Q^k` for a polynomial `P`; `Q` commutes with every oscillator.
fn times_q(p: &NormalPoly, k: u8) -> NormalPoly {
    let mut out = NormalPoly::zero();
    for t in p.terms() {
        let mut ladders: Vec<Ladder> = t.create.iter().map(|&s| Ladder { slot: s, create: true }).collect();
        ladders.extend(t.annihilate.iter().map(|&s| Ladder { slot: s, create: false }));
        out.add_ladders(t.coeff, t.q_pow + k, &ladders);
    }
    out
}

/// Assembles `W², W³, 𝒞, c_ε` and `ℋ`; matrices are built when `dim ≤ OPERATOR_CAP`.
pub fn build_bundle(p: &EllipticParams, basis: &FockBasis, rep: &RepCoeffs) -> Result<HamiltonianBundle> {
    p.validate()?;
    let mc = basis.mode_cutoff();
    if mc < 2 {
        return invalid(format!("Hamiltonian needs mode cutoff M >= 2, got {mc}"));
    }
    if rep.mode_cutoff() != mc {
        return invalid("representation and basis mode cutoffs differ");
    }
    let nu = p.nu;
    let w2 = w2_poly(rep);
    let w3 = w3_poly(rep);
    let calc = calc_poly(mc);
    let (c_eps, c_eps_tail) = c_eps_from_rep(rep, p.eps, p.q);
    let mut h = NormalPoly::zero();
    h.add(&w3, re(nu));
    h.add(&calc, re(1.0 - nu * nu));
    h.add(&times_q(&w2, 1), re(2.0 * nu * (nu - 1.0)));
    h.add(&q_power(3), re(nu * (nu - 1.0).powi(2) * (2.0 + nu) / 3.0));
    h.add(&q_power(1), re(-nu.powi(4) * c_eps));
    h.prune(1e-300);
    let ops = if basis.dim() <= OPERATOR_CAP {
        Some(HamiltonianOperators {
            w2: FockOperator::from_poly(basis, "W2", &w2)?,
            w3: FockOperator::from_poly(basis, "W3", &w3)?,
            calc: FockOperator::from_poly(basis, "C", &calc)?,
            q: FockOperator::from_poly(basis, "Q", &q_power(1))?,
            h: FockOperator::from_poly(basis, "H", &h)?,
        })
    } else {
        None
    };
    Ok(HamiltonianBundle { w2, w3, calc, h, c_eps, c_eps_tail, params: *p, rep: rep.clone(), ops })
}

impl HamiltonianBundle {
    /// `ℋ v`.
    pub fn apply(&self, basis: &FockBasis, v: &FockVector) -> FockVector {
        match &self.ops {
            Some(o) => o.h.apply(basis, v),
            None => self.h.apply(basis, v),
        }
    }

    /// Largest entry of `ℋ − [νW³ + (1−ν²)𝒞 + 2ν(ν−1)W²Q + …]` built from the separate matrices.
    pub fn assembly_defect(&self, basis: &FockBasis) -> Option<f64> {
        let o = self.ops.as_ref()?;
        let nu = self.params.nu;
        let n = basis.dim();
        let mut worst: f64 = 0.0;
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        for j in (0..n).step_by((n / 200).max(1)) {
            e[j] = ONE;
            let h = o.h.matvec(&e);
            let w3 = o.w3.matvec(&e);
            let c = o.calc.matvec(&e);
            let q1 = o.q.matvec(&e);
            let w2q = o.w2.matvec(&q1);
            let q2 = o.q.matvec(&q1);
            let q3 = o.q.matvec(&q2);
            for i in 0..n {
                let r = h[i]
                    - w3[i] * nu
                    - c[i] * (1.0 - nu * nu)
                    - w2q[i] * (2.0 * nu * (nu - 1.0))
                    - q3[i] * (nu * (nu - 1.0).powi(2) * (2.0 + nu) / 3.0)
                    + q1[i] * (nu.powi(4) * self.c_eps);
                worst = worst.max(r.norm());
            }
            e[j] = Complex64::new(0.0, 0.0);
        }
        Some(worst)
    }
}

/// `max_{m,n ≤ M, m+n ≤ M} |c_m²c_n²s_{m+n}² − s_m²s_n²c_{m+n}²|`.
pub fn crucial_defect(rep: &RepCoeffs) -> f64 {
    let m = rep.mode_cutoff() as i32;
    let mut worst: f64 = 0.0;
    for a in 1..=m {
        for b in 1..=m - a {
            let (ca, sa, cb, sb) = (rep.c(a).powi(2), rep.s(a).powi(2), rep.c(b).powi(2), rep.s(b).powi(2));
            let (cab, sab) = (rep.c(a + b).powi(2), rep.s(a + b).powi(2));
            worst = worst.max((ca * cb * sab - sa * sb * cab).abs());
        }
    }
    worst
}

pub fn crucial_check(rep: &RepCoeffs, tol: f64) -> Report {
    let mut r = Report::new();
    r.push(Check::new("crucial_constraint", crucial_defect(rep), tol).param("M", rep.mode_cutoff()));
    r
}

/// `J(α″) = −Σ n² α_n β(−n)` as a polynomial.
pub fn j_second(spec: &VertexSpec, rep: &RepCoeffs) -> NormalPoly {
    let m = spec.mode_cutoff().min(rep.mode_cutoff()) as i32;
    let mut p = NormalPoly::zero();
    for n in (-m..=m).filter(|n| *n != 0) {
        p.add_beta_product(rep, &[-n], -spec.alpha(n) * (n * n) as f64);
    }
    p
}

/// `‖(𝒞Φ + Φ𝒞 − 2:Φ𝒞: + i:J(α″)Φ:) v‖` maximized over basis states of level `≤ max_level`.
pub fn calc_vertex_check(
    spec: &VertexSpec,
    basis: &FockBasis,
    rep: &RepCoeffs,
    max_level: usize,
    windings: &[i32],
    tol: f64,
) -> Result<Report> {
    let calc = calc_poly(basis.mode_cutoff());
    let jpp = j_second(spec, rep);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &w1 in windings {
        for i in basis.low_levels(max_level) {
            let v = FockVector::basis_state(basis, i, w1, 0);
            let phi_v = apply_vertex(basis, spec, rep, &v);
            let mut out = calc.apply(basis, &phi_v);
            out.axpy(ONE, &apply_vertex(basis, spec, rep, &calc.apply(basis, &v)));
            let ins = apply_insertion(basis, spec, rep, &calc, &v)?;
            out.axpy(re(-2.0), &ins);
            out.axpy(I, &apply_insertion(basis, spec, rep, &jpp, &v)?);
            worst = worst.max(out.norm());
            scale = scale.max(ins.norm());
        }
    }
    let mut r = Report::new();
    r.push(
        Check::new("calc_vertex_identity", worst / scale.max(1.0), tol)
            .param("max_level", max_level)
            .param("M", basis.mode_cutoff())
            .param("windings", windings.to_vec()),
    );
    Ok(r)
}

/// Random vertex data: `α_n` for `0 < |n| ≤ active` uniform in the unit box of
/// half-width ½, a real `α₀` and a winding shift in `{−1, 0, 1}`.
pub fn random_vertex_spec(mode_cutoff: usize, active: usize, rng: &mut ChaCha8Rng) -> Result<VertexSpec> {
    let mut spec = VertexSpec::new(mode_cutoff, rng.random_range(-1..=1));
    let a = active.min(mode_cutoff) as i32;
    for n in (-a..=a).filter(|n| *n != 0) {
        spec.set_alpha(n, Complex64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)))?;
    }
    spec.set_alpha(0, re(rng.random_range(-0.5..0.5)))?;
    Ok(spec)
}

/// `calc_vertex_check` over `count` random vertex specs; reports the worst residual.
pub fn calc_vertex_random_report(
    basis: &FockBasis,
    rep: &RepCoeffs,
    count: usize,
    seed: u64,
    max_level: usize,
    tol: f64,
) -> Result<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = basis.mode_cutoff();
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let spec = random_vertex_spec(m, m.saturating_sub(1).max(1), &mut rng)?;
        // keep the shifted windings inside the basis
        let w = basis.winding_cutoff() - spec.w.abs();
        let windings: Vec<i32> = (-w.min(1)..=w.min(1)).collect();
        let r = calc_vertex_check(&spec, basis, rep, max_level, &windings, tol)?;
        worst = worst.max(r.max_residual());
    }
    let mut r = Report::new();
    r.push(
        Check::new("calc_vertex_random_specs", worst, tol)
            .param("count", count)
            .param("seed", seed)
            .param("max_level", max_level)
            .param("M", m),
    );
    Ok(r)
}

/// Crucial constraint at `rep` plus a control with `s₂` shifted by 0.1, which
/// must exceed `factor · tol`.
pub fn crucial_control_report(rep: &RepCoeffs, tol: f64, factor: f64) -> Result<Report> {
    let mut r = crucial_check(rep, tol);
    let mut s = rep.s_all().to_vec();
    let k = if s.len() > 1 { 1 } else { 0 };
    s[k] += 0.1;
    let bad = RepCoeffs::from_s(s)?;
    r.push(Check::expect_above("crucial_perturbed_control", crucial_defect(&bad), factor * tol).param("shifted_mode", k + 1));
    Ok(r)
}

/// Which expression is used for the rest term `ℛ_ε(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RestForm {
    /// `2ν[ν s_m²(β(n)e^{inx} − β(−n)e^{−inx}) − :β(−m)β(n):] d_{mn} e^{−mε}`.
    Printed,
    /// `−2ν[ν s_m²(β(n)e^{inx} − β(−n)e^{−inx}) e^{−mε} − :β(−m)β(n): e^{−i(m−n)x}] d_{mn}`,
    /// which is what the commutator relation requires.
    Derived,
}

/// `ℛ_ε(x)` truncated to `m, n ≤ M`.
pub fn rest_poly(x: f64, p: &EllipticParams, rep: &RepCoeffs, form: RestForm) -> NormalPoly {
    let mc = rep.mode_cutoff() as i32;
    let (nu, eps) = (p.nu, p.eps);
    let mut out = NormalPoly::zero();
    for m in 1..=mc {
        let s2 = rep.s(m).powi(2);
        for n in 1..=mc {
            let (mf, nf) = (m as f64, n as f64);
            let d = exp_diff_over_eps((mf - nf).abs(), mf + nf, eps);
            let damp = (-mf * eps).exp();
            let lin = match form {
                RestForm::Printed => 2.0 * nu * nu * s2 * d * damp,
                RestForm::Derived => -2.0 * nu * nu * s2 * d * damp,
            };
            if lin != 0.0 {
                out.add_beta_product(rep, &[n], Complex64::from_polar(lin, nf * x));
                out.add_beta_product(rep, &[-n], -Complex64::from_polar(lin, -nf * x));
            }
            let quad = match form {
                RestForm::Printed => re(-2.0 * nu * d * damp),
                RestForm::Derived => Complex64::from_polar(2.0 * nu * d, -(mf - nf) * x),
            };
            out.add_beta_product(rep, &[-m, n], quad);
        }
    }
    out
}

/// `−Σ_{n≤M} n(c_n² e^{inr} + s_n² e^{−inr}) e^{−nε}` from the stored coefficients.
pub fn v_from_rep(r: f64, eps: f64, rep: &RepCoeffs) -> Complex64 {
    let mut v = Complex64::new(0.0, 0.0);
    for n in 1..=rep.mode_cutoff() as i32 {
        let nf = n as f64;
        let e = (-nf * eps).exp() * nf;
        v -= Complex64::from_polar(rep.c(n).powi(2) * e, nf * r) + Complex64::from_polar(rep.s(n).powi(2) * e, -nf * r);
    }
    v
}

fn phi_specs(x: &[f64], p: &EllipticParams, mc: usize) -> Result<Vec<VertexSpec>> {
    x.iter().map(|&xj| anyon_to_vertex(&AnyonSpec::new(1, xj, p.eps), p.nu, mc)).collect()
}

/// `Φ^N_ε(x) v = φ(x₁)⋯φ(x_N) v`.
pub fn apply_phi_n(basis: &FockBasis, x: &[f64], p: &EllipticParams, rep: &RepCoeffs, v: &FockVector) -> Result<FockVector> {
    let specs = phi_specs(x, p, basis.mode_cutoff())?;
    let mut out = v.clone();
    for s in specs.iter().rev() {
        out = apply_vertex(basis, s, rep, &out);
    }
    Ok(out)
}

/// `Ψ^N_ε(x) v` with the rest term in the chosen form.
pub fn apply_psi_n(
    basis: &FockBasis,
    x: &[f64],
    p: &EllipticParams,
    rep: &RepCoeffs,
    form: RestForm,
    v: &FockVector,
) -> Result<FockVector> {
    let specs = phi_specs(x, p, basis.mode_cutoff())?;
    let mut total = FockVector::zero();
    for j in 0..x.len() {
        let mut w = v.clone();
        for k in (0..x.len()).rev() {
            w = if k == j {
                apply_insertion_commuted(basis, &specs[k], rep, &rest_poly(x[k], p, rep, form), &w)?
            } else {
                apply_vertex(basis, &specs[k], rep, &w)
            };
        }
        total.axpy(ONE, &w);
    }
    Ok(total)
}

/// `Σ_j ∂²_{x_j} Φ^N(x) v` by the fourth-order five-point stencil.
fn laplacian_fd(basis: &FockBasis, x: &[f64], p: &EllipticParams, rep: &RepCoeffs, v: &FockVector, h: f64) -> Result<FockVector> {
    let center = apply_phi_n(basis, x, p, rep, v)?;
    let mut lap = FockVector::zero();
    for j in 0..x.len() {
        let shifted = |t: f64| -> Result<FockVector> {
            let mut y = x.to_vec();
            y[j] += t;
            apply_phi_n(basis, &y, p, rep, v)
        };
        let w = 1.0 / (12.0 * h * h);
        lap.axpy(re(16.0 * w), &shifted(h)?);
        lap.axpy(re(16.0 * w), &shifted(-h)?);
        lap.axpy(re(-w), &shifted(2.0 * h)?);
        lap.axpy(re(-w), &shifted(-2.0 * h)?);
        lap.axpy(re(-30.0 * w), &center);
    }
    Ok(lap)
}

/// `Σ_j ∂_{x_j} Φ^N(x) v` by the fourth-order central stencil.
fn gradient_sum_fd(basis: &FockBasis, x: &[f64], p: &EllipticParams, rep: &RepCoeffs, v: &FockVector, h: f64) -> Result<FockVector> {
    let mut g = FockVector::zero();
    for j in 0..x.len() {
        let shifted = |t: f64| -> Result<FockVector> {
            let mut y = x.to_vec();
            y[j] += t;
            apply_phi_n(basis, &y, p, rep, v)
        };
        let w = 1.0 / (12.0 * h);
        g.axpy(re(8.0 * w), &shifted(h)?);
        g.axpy(re(-8.0 * w), &shifted(-h)?);
        g.axpy(re(-w), &shifted(2.0 * h)?);
        g.axpy(re(w), &shifted(-2.0 * h)?);
    }
    Ok(g)
}

/// `∂²_x φ_ε(x) v` from `−iν:ρ̃′φ: − ν²:ρ̃²φ:`, with `Q` inside the ordering
/// taken as the mean of the winding before and after `φ`.
pub fn phi_second_derivative_analytic(
    basis: &FockBasis,
    x: f64,
    p: &EllipticParams,
    rep: &RepCoeffs,
    v: &FockVector,
) -> Result<FockVector> {
    let mc = basis.mode_cutoff() as i32;
    let nu = p.nu;
    let spec = anyon_to_vertex(&AnyonSpec::new(1, x, p.eps), nu, mc as usize)?;
    let mut rho = NormalPoly::zero();
    let mut rho_d = NormalPoly::zero();
    for n in (-mc..=mc).filter(|n| *n != 0) {
        let nf = n as f64;
        let e = Complex64::from_polar((-nf.abs() * p.eps).exp(), nf * x);
        rho.add_beta_product(rep, &[n], e);
        rho_d.add_beta_product(rep, &[n], I * nf * e);
    }
    let mut rho2 = NormalPoly::zero();
    for a in (-mc..=mc).filter(|n| *n != 0) {
        for b in (-mc..=mc).filter(|n| *n != 0) {
            let e = Complex64::from_polar(
                (-((a as f64).abs() + (b as f64).abs()) * p.eps).exp(),
                (a + b) as f64 * x,
            );
            rho2.add_beta_product(rep, &[a, b], e);
        }
    }
    let mut out = FockVector::zero();
    for ((w1, w2), blk) in v.sectors() {
        let part = FockVector::from_block(*w1, *w2, blk.clone());
        let qbar = *w1 as f64 + 0.5;
        // ρ̃ = νQ̄ + ρ,  ρ̃² = ν²Q̄² + 2νQ̄ρ + :ρ²:
        let phi = apply_vertex(basis, &spec, rep, &part);
        let ins_rho = apply_insertion(basis, &spec, rep, &rho, &part)?;
        out.axpy(-I * nu, &apply_insertion(basis, &spec, rep, &rho_d, &part)?);
        out.axpy(re(-nu * nu * nu * nu * qbar * qbar), &phi);
        out.axpy(re(-2.0 * nu * nu * nu * qbar), &ins_rho);
        out.axpy(re(-nu * nu), &apply_insertion(basis, &spec, rep, &rho2, &part)?);
    }
    Ok(out)
}

/// Settings of the commutator checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sq1Options {
    /// Finite-difference step for the `x`-derivatives.
    pub fd_step: f64,
    pub rest: RestForm,
    /// Include the `ενΨ` term on the right-hand side.
    pub include_rest: bool,
    /// Largest acceptable mode-truncation tail `e^{−Mε}`.
    pub tail_tol: f64,
}

impl Default for Sq1Options {
    fn default() -> Self {
        Self { fd_step: 1e-2 * 2.0 * std::f64::consts::PI, rest: RestForm::Derived, include_rest: true, tail_tol: 1e-4 }
    }
}

/// Both sides of the first commutator relation.
#[derive(Debug, Clone)]
pub struct Sq1Sides {
    pub lhs: FockVector,
    pub rhs: FockVector,
    /// The `ενΨΩ` part of `rhs` (zero when excluded).
    pub rest: FockVector,
}

fn check_tail(basis: &FockBasis, eps: f64, tol: f64) -> Result<()> {
    let tail = (-(basis.mode_cutoff() as f64) * eps).exp();
    if tail > tol {
        return Err(Error::TruncationInsufficient { tail, tol });
    }
    Ok(())
}

/// `[ℋ, Φ^N(x)]Ω` and `H_N^{2ε}Φ^N(x)Ω + εν Ψ^N(x)Ω`.
pub fn sq1_sides(
    bundle: &HamiltonianBundle,
    basis: &FockBasis,
    x: &[f64],
    opts: &Sq1Options,
) -> Result<Sq1Sides> {
    let p = &bundle.params;
    let rep = &bundle.rep;
    if !(p.eps > 0.0) {
        return invalid("the commutator relation needs eps > 0");
    }
    if basis.winding_cutoff() < x.len() as i32 {
        return invalid("winding cutoff must be at least the particle number");
    }
    check_tail(basis, p.eps, opts.tail_tol)?;
    let omega = FockVector::vacuum(basis);
    let phi_omega = apply_phi_n(basis, x, p, rep, &omega)?;
    let h_omega = bundle.apply(basis, &omega);
    let mut lhs = bundle.apply(basis, &phi_omega);
    lhs.axpy(-ONE, &apply_phi_n(basis, x, p, rep, &h_omega)?);

    let mut rhs = laplacian_fd(basis, x, p, rep, &omega, opts.fd_step)?.scale(-ONE);
    let nu2 = p.nu * p.nu;
    let mut pot = Complex64::new(0.0, 0.0);
    for j in 0..x.len() {
        for k in j + 1..x.len() {
            pot += v_from_rep(x[j] - x[k], 2.0 * p.eps, rep);
        }
    }
    rhs.axpy(pot * (2.0 * nu2 * (nu2 - 1.0)), &phi_omega);
    let rest = if opts.include_rest {
        apply_psi_n(basis, x, p, rep, opts.rest, &omega)?.scale(re(p.eps * p.nu))
    } else {
        FockVector::zero()
    };
    rhs.axpy(ONE, &rest);
    Ok(Sq1Sides { lhs, rhs, rest })
}

/// `‖v_L − v_R‖ / ‖v_R‖` for the first commutator relation.
pub fn sq1_residual(bundle: &HamiltonianBundle, basis: &FockBasis, x: &[f64], opts: &Sq1Options) -> Result<f64> {
    let s = sq1_sides(bundle, basis, x, opts)?;
    Ok(s.lhs.sub(&s.rhs).norm() / s.rhs.norm().max(f64::MIN_POSITIVE))
}

/// Report for the first relation, with and without the rest term.
pub fn sq1_report(bundle: &HamiltonianBundle, basis: &FockBasis, x: &[f64], opts: &Sq1Options, tol: f64) -> Result<Report> {
    let full = sq1_residual(bundle, basis, x, opts)?;
    let bare = sq1_residual(bundle, basis, x, &Sq1Options { include_rest: false, ..*opts })?;
    let p = &bundle.params;
    let mut r = Report::new();
    r.push(
        Check::new("sq1_residual", full, tol)
            .param("N", x.len())
            .param("x", x.to_vec())
            .param("nu", p.nu)
            .param("q", p.q)
            .param("eps", p.eps)
            .param("M", basis.mode_cutoff())
            .param("L", basis.level_cutoff())
            .param("fd_step", opts.fd_step),
    );
    r.push(Check::expect_above("sq1_without_rest_term", bare, full).param("eps", p.eps));
    Ok(r)
}

/// Size of the `ενΨ` contribution at one regulator value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestGapRow {
    pub eps: f64,
    pub mode_cutoff: usize,
    /// `‖ενΨΩ‖ / ‖v_R‖`.
    pub gap: f64,
    pub residual_with_rest: f64,
    pub residual_without_rest: f64,
}

/// Scans `ε` with a cutoff `M(ε)` per entry; each entry is `(ε, M)`.
pub fn rest_gap_scan(
    x: &[f64],
    q: f64,
    nu: f64,
    cutoffs: &[(f64, usize)],
    level_cutoff: usize,
    opts: &Sq1Options,
) -> Result<Vec<RestGapRow>> {
    cutoffs
        .iter()
        .map(|&(eps, m)| {
            let p = EllipticParams::from_nu(q, eps, nu)?;
            let basis = FockBasis::new(m, level_cutoff, x.len() as i32)?;
            let rep = RepCoeffs::from_q(q, m)?;
            let bundle = build_bundle(&p, &basis, &rep)?;
            let o = Sq1Options { include_rest: true, ..*opts };
            let s = sq1_sides(&bundle, &basis, x, &o)?;
            let rn = s.rhs.norm().max(f64::MIN_POSITIVE);
            let mut bare = s.rhs.clone();
            bare.axpy(-ONE, &s.rest);
            Ok(RestGapRow {
                eps,
                mode_cutoff: m,
                gap: s.rest.norm() / rn,
                residual_with_rest: s.lhs.sub(&s.rhs).norm() / rn,
                residual_without_rest: s.lhs.sub(&bare).norm() / bare.norm().max(f64::MIN_POSITIVE),
            })
        })
        .collect()
}

/// Least-squares slope of `log gap` against `log ε`; passes when it lies within `band` of 1.
pub fn rest_gap_report(rows: &[RestGapRow], band: f64) -> Report {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.eps.ln(), r.gap.ln())).collect();
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { f64::NAN };
    let mut r = Report::new();
    r.push(
        Check::new("rest_gap_order_minus_one", (slope - 1.0).abs(), band)
            .param("slope", slope)
            .param("eps", rows.iter().map(|r| r.eps).collect::<Vec<_>>())
            .param("M", rows.iter().map(|r| r.mode_cutoff).collect::<Vec<_>>())
            .param("gap", rows.iter().map(|r| r.gap).collect::<Vec<_>>())
            .param("residual_with_rest", rows.iter().map(|r| r.residual_with_rest).collect::<Vec<_>>())
            .param("residual_without_rest", rows.iter().map(|r| r.residual_without_rest).collect::<Vec<_>>()),
    );
    r
}

/// `⟨Φ(x)ℋΩ, Φ(y)Ω⟩ − ⟨Φ(x)Ω, Φ(y)ℋΩ⟩`, i.e. `⟨Ω|[ℋ, Φ(x)*Φ(y)]Ω⟩`.
pub fn sq2_value(
    bundle: &HamiltonianBundle,
    basis: &FockBasis,
    x: &[f64],
    y: &[f64],
    eps_p: f64,
) -> Result<(Complex64, f64)> {
    let p = &bundle.params;
    let rep = &bundle.rep;
    let py = p.with_eps(eps_p);
    let omega = FockVector::vacuum(basis);
    let h_omega = bundle.apply(basis, &omega);
    let a1 = apply_phi_n(basis, x, p, rep, &h_omega)?;
    let b1 = apply_phi_n(basis, y, &py, rep, &omega)?;
    let a2 = apply_phi_n(basis, x, p, rep, &omega)?;
    let b2 = apply_phi_n(basis, y, &py, rep, &h_omega)?;
    let t1 = a1.inner(&b1);
    let t2 = a2.inner(&b2);
    Ok((t1 - t2, t1.norm().max(t2.norm())))
}

/// The second relation at the given representation plus a negative control with
/// random `s_n`, which must be larger by at least `control_factor`.
pub fn sq2_report(
    bundle: &HamiltonianBundle,
    basis: &FockBasis,
    x: &[f64],
    y: &[f64],
    eps_p: f64,
    tol: f64,
    seed: u64,
    control_factor: f64,
) -> Result<Report> {
    let (v, scale) = sq2_value(bundle, basis, x, y, eps_p)?;
    let mut r = Report::new();
    r.push(
        Check::new("sq2_residual", v.norm(), tol)
            .param("N", x.len())
            .param("q", bundle.params.q)
            .param("eps", bundle.params.eps)
            .param("eps_prime", eps_p)
            .param("term_scale", scale)
            .param("mode_tail", (-(basis.mode_cutoff() as f64) * bundle.params.eps.min(eps_p)).exp()),
    );
    // for N = 1 the form vanishes for every choice of s_n, so the control needs N >= 2
    if x.len() < 2 {
        return Ok(r);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s: Vec<f64> = (0..basis.mode_cutoff())
        .map(|n| bundle.rep.s((n + 1) as i32) + rng.random_range(0.2..0.6) * 0.5f64.powi(n as i32))
        .collect();
    let bad_rep = RepCoeffs::from_s(s)?;
    let bad = build_bundle(&bundle.params, basis, &bad_rep)?;
    let (vb, _) = sq2_value(&bad, basis, x, y, eps_p)?;
    r.push(
        Check::expect_above("sq2_random_rep_control", vb.norm(), control_factor * v.norm().max(tol))
            .param("seed", seed)
            .param("crucial_defect", crucial_defect(&bad_rep)),
    );
    Ok(r)
}

/// Components of `v` at level `≤ max_level`.
pub fn project_levels(basis: &FockBasis, v: &FockVector, max_level: usize) -> FockVector {
    let mut out = FockVector::zero();
    for ((w1, w2), blk) in v.sectors() {
        let b = blk
            .iter()
            .enumerate()
            .map(|(i, z)| if basis.level(i) <= max_level { *z } else { Complex64::new(0.0, 0.0) })
            .collect();
        out.axpy(ONE, &FockVector::from_block(*w1, *w2, b));
    }
    out
}

/// `[Q, Φ^N]Ω = NΦ^NΩ` and `[W² + ½(ν²−1)Q², Φ^N]Ω = Σ i∂_jΦ^NΩ`.
///
/// The momentum relation is compared at levels `≤ L − 2M`, where `W²` acting
/// on the truncated vector is exact.
pub fn charge_momentum_check(
    bundle: &HamiltonianBundle,
    basis: &FockBasis,
    x: &[f64],
    fd_step: f64,
    tol_charge: f64,
    tol_momentum: f64,
) -> Result<Report> {
    let p = &bundle.params;
    let rep = &bundle.rep;
    let nu = p.nu;
    let omega = FockVector::vacuum(basis);
    let phi = apply_phi_n(basis, x, p, rep, &omega)?;
    let nf = x.len() as f64;
    let scale = phi.norm().max(1.0);

    let charge = apply_q(&phi, 1).sub(&apply_phi_n(basis, x, p, rep, &apply_q(&omega, 1))?);
    let charge_res = charge.sub(&phi.scale(re(nf))).norm() / scale;

    let mut k = bundle.w2.clone();
    k.add(&q_power(2), re(0.5 * (nu * nu - 1.0)));
    let mut lhs = k.apply(basis, &phi);
    lhs.axpy(-ONE, &apply_phi_n(basis, x, p, rep, &k.apply(basis, &omega))?);
    let rhs = if x.is_empty() {
        FockVector::zero()
    } else {
        gradient_sum_fd(basis, x, p, rep, &omega, fd_step)?.scale(I)
    };
    let keep = basis.level_cutoff().saturating_sub(2 * basis.mode_cutoff());
    let mom_res = project_levels(basis, &lhs.sub(&rhs), keep).norm() / scale;
    let mut r = Report::new();
    r.push(Check::new("phi_charge_relation", charge_res, tol_charge).param("N", x.len()));
    r.push(
        Check::new("phi_momentum_relation", mom_res, tol_momentum)
            .param("N", x.len())
            .param("fd_step", fd_step)
            .param("compared_levels", keep),
    );
    Ok(r)
}

/// `ℋΩ = νW³₊Ω` and `⟨Ω|ℋΩ⟩ = 0`.
pub fn vacuum_check(bundle: &HamiltonianBundle, basis: &FockBasis, tol: f64) -> Report {
    let omega = FockVector::vacuum(basis);
    let h_omega = bundle.apply(basis, &omega);
    let plus = w3_creation_part(&bundle.w3).apply(basis, &omega).scale(re(bundle.params.nu));
    let diff = h_omega.sub(&plus).norm() / h_omega.norm().max(1.0);
    let mut r = Report::new();
    r.push(Check::new("h_vacuum_creation_part", diff, tol).param("norm_h_omega", h_omega.norm()));
    r.push(Check::new("h_vacuum_expectation", omega.inner(&h_omega).norm(), tol));
    r
}

/// `|⟨u, ℋv⟩ − ⟨ℋu, v⟩|` for seeded random vectors on the retained sectors.
pub fn self_adjoint_check(bundle: &HamiltonianBundle, basis: &FockBasis, windings: &[i32], seed: u64, tol: f64) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rand_vec = || {
        let mut v = FockVector::zero();
        for &w in windings {
            let blk = (0..basis.n_osc())
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            v.axpy(ONE, &FockVector::from_block(w, 0, blk));
        }
        v
    };
    let u = rand_vec();
    let v = rand_vec();
    let hu = bundle.apply(basis, &u);
    let hv = bundle.apply(basis, &v);
    let d = (u.inner(&hv) - hu.inner(&v)).norm() / (hu.norm() * v.norm()).max(1.0);
    let mut r = Report::new();
    r.push(Check::new("h_self_adjoint", d, tol).param("seed", seed));
    if let Some(o) = &bundle.ops {
        r.push(Check::new("h_matrix_hermitian", o.h.max_diff(&o.h.adjoint()), tol));
    }
    r
}
