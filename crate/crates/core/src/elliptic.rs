//! Regularized elliptic functions: θ, `C_ε`, `b_ε`, the pair potential `V_ε`
//! in three representations, the Weierstrass offset and the regularized
//! sign/delta kernels.
//!
//! Every infinite sum or product is cut off by a [`TailControl`]. The
//! `q`-independent leading parts (`−log(1 − e^{ir−ε})` and its derivatives,
//! `cot`-type kernels) are summed in closed form, so small `ε` costs nothing
//! extra; the `q`-dependent remainders are geometric in `q²` and summed
//! term by term.

use crate::error::{invalid, Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Nome, regulator and statistics parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticParams {
    pub q: f64,
    pub eps: f64,
    pub lambda: f64,
    pub nu: f64,
}

impl EllipticParams {
    /// Builds parameters from `λ`, taking `ν = +√λ`.
    pub fn new(q: f64, eps: f64, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return invalid(format!("lambda must be non-negative, got {lambda}"));
        }
        let p = Self { q, eps, lambda, nu: lambda.sqrt() };
        p.validate()?;
        Ok(p)
    }

    /// Builds parameters from the vertex charge `ν` (so `λ = ν²`).
    pub fn from_nu(q: f64, eps: f64, nu: f64) -> Result<Self> {
        let p = Self { q, eps, lambda: nu * nu, nu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.q) {
            return invalid(format!("nome must satisfy 0 <= q < 1, got {}", self.q));
        }
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return invalid(format!("regulator must satisfy eps >= 0, got {}", self.eps));
        }
        if (self.nu * self.nu - self.lambda).abs() > 1e-14 * self.lambda.max(1.0) {
            return invalid("lambda must equal nu^2");
        }
        Ok(())
    }

    /// Inverse temperature `β = −2 ln q` (infinite at `q = 0`).
    pub fn beta(&self) -> f64 {
        -2.0 * self.q.ln()
    }

    /// Coupling `γ = 2λ(λ−1)`.
    pub fn gamma(&self) -> f64 {
        2.0 * self.lambda * (self.lambda - 1.0)
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        Self { eps, ..*self }
    }
}

/// Truncation rule for the infinite sums and products.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailControl {
    pub tail_tol: f64,
    pub n_max: usize,
}

impl Default for TailControl {
    fn default() -> Self {
        Self { tail_tol: 1e-16, n_max: 512 }
    }
}

impl TailControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.tail_tol > 0.0) || self.n_max < 1 {
            return invalid("tail control needs tail_tol > 0 and n_max >= 1");
        }
        Ok(())
    }
}

/// `|c_n|² = 1/(1 − q^{2n})`.
pub fn cn2(n: usize, q: f64) -> f64 {
    1.0 / (1.0 - q.powi(2 * n as i32))
}

/// `|s_n|² = q^{2n}/(1 − q^{2n})`.
pub fn sn2(n: usize, q: f64) -> f64 {
    let a = q.powi(2 * n as i32);
    a / (1.0 - a)
}

fn is_singular(r: f64, eps: f64) -> bool {
    if eps > 0.0 {
        return false;
    }
    let w = r.rem_euclid(2.0 * PI);
    w.min(2.0 * PI - w) < 1e-14
}

fn check_regular(r: f64, eps: f64, what: &str) -> Result<()> {
    if is_singular(r, eps) {
        return Err(Error::Singular(format!("{what} at r = {r} with eps = 0")));
    }
    Ok(())
}

/// `θ(r) = sin(r/2) ∏_{n≥1} (1 − 2q^{2n} cos r + q^{4n})`.
pub fn theta(r: f64, q: f64, tc: &TailControl) -> f64 {
    let c = r.cos();
    let mut prod = (0.5 * r).sin();
    let q2 = q * q;
    let mut a = q2;
    for _ in 0..tc.n_max {
        if a < tc.tail_tol {
            break;
        }
        prod *= 1.0 - 2.0 * a * c + a * a;
        a *= q2;
    }
    prod
}

/// First and second derivatives of `log θ(r)`, term by term from the product.
pub fn theta_log_derivs(r: f64, q: f64, tc: &TailControl) -> Result<(f64, f64)> {
    check_regular(r, 0.0, "theta log-derivative")?;
    let (s, c) = (0.5 * r).sin_cos();
    let mut d1 = 0.5 * c / s;
    let mut d2 = -0.25 / (s * s);
    let (sr, cr) = r.sin_cos();
    let q2 = q * q;
    let mut a = q2;
    for _ in 0..tc.n_max {
        if a < tc.tail_tol {
            break;
        }
        let f = 1.0 - 2.0 * a * cr + a * a;
        let f1 = 2.0 * a * sr;
        let f2 = 2.0 * a * cr;
        d1 += f1 / f;
        d2 += (f2 * f - f1 * f1) / (f * f);
        a *= q2;
    }
    Ok((d1, d2))
}

/// `q`-dependent part of the `k`-th derivative of `C_ε`:
/// `Σ (1/n)|s_n|² [(in)^k e^{inr} + (−in)^k e^{−inr}] e^{−nε}` (always real).
fn c_eps_q_part(r: f64, q: f64, eps: f64, k: u8, tc: &TailControl) -> f64 {
    if q == 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    let mut prev_bound = f64::INFINITY;
    for n in 1..=tc.n_max {
        let nf = n as f64;
        let w = 2.0 * sn2(n, q) * (-nf * eps).exp();
        let (s, c) = (nf * r).sin_cos();
        let term = match k {
            0 => w * c / nf,
            1 => -w * s,
            _ => -w * nf * c,
        };
        acc += term;
        let bound = w * nf.powi(k as i32 - 1);
        if bound < tc.tail_tol * acc.abs().max(1.0) && bound <= prev_bound {
            break;
        }
        prev_bound = bound;
    }
    acc
}

/// Leading `q`-independent part: `Σ (in)^k z^n / n` with `z = e^{ir−ε}`.
fn c_eps_leading(r: f64, eps: f64, k: u8, tc: &TailControl) -> Complex64 {
    let z = (I * r - eps).exp();
    if z.norm() < 0.5 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut zn = Complex64::new(1.0, 0.0);
        for n in 1..=tc.n_max {
            let nf = n as f64;
            zn *= z;
            let term = (I * nf).powi(k as i32) * zn / nf;
            acc += term;
            if term.norm() < tc.tail_tol * acc.norm().max(1e-300) && n > k as usize {
                break;
            }
        }
        return acc;
    }
    let one = Complex64::new(1.0, 0.0);
    match k {
        0 => -(one - z).ln(),
        1 => I * z / (one - z),
        _ => -z / ((one - z) * (one - z)),
    }
}

/// `C_ε(r)` and its first two `r`-derivatives (`deriv ∈ {0, 1, 2}`).
pub fn c_eps(r: f64, p: &EllipticParams, deriv: u8, tc: &TailControl) -> Result<Complex64> {
    if deriv > 2 {
        return invalid("C_eps supports derivatives of order 0, 1, 2");
    }
    check_regular(r, p.eps, "C_eps")?;
    let lead = c_eps_leading(r, p.eps, deriv, tc);
    Ok(lead + c_eps_q_part(r, p.q, p.eps, deriv, tc))
}

/// `log b_ε(r) = −ir/2 − C_ε(r)` and its derivatives; fixes the branch of `b^λ`.
pub fn log_b(r: f64, p: &EllipticParams, deriv: u8, tc: &TailControl) -> Result<Complex64> {
    let c = c_eps(r, p, deriv, tc)?;
    Ok(match deriv {
        0 => -I * (0.5 * r) - c,
        1 => -I * 0.5 - c,
        _ => -c,
    })
}

/// Backend for [`b_eps`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BBackend {
    Product,
    Series,
}

/// The regularized pair function `b_ε(r)`.
pub fn b_eps(r: f64, p: &EllipticParams, backend: BBackend, tc: &TailControl) -> Result<Complex64> {
    match backend {
        BBackend::Series => Ok(log_b(r, p, 0, tc)?.exp()),
        BBackend::Product => {
            let half = Complex64::new(0.5 * r, 0.5 * p.eps);
            let mut b = -I * 2.0 * (-0.5 * p.eps).exp() * half.sin();
            let c = r.cos();
            let q2 = p.q * p.q;
            let mut a = q2 * (-p.eps).exp();
            for _ in 0..tc.n_max {
                if a < tc.tail_tol {
                    break;
                }
                b *= 1.0 - 2.0 * a * c + a * a;
                a *= q2;
            }
            Ok(b)
        }
    }
}

/// Representation used by [`v_eps`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VRep {
    /// Mode sum `−Σ n(|c_n|² e^{inr} + |s_n|² e^{−inr}) e^{−nε}`.
    Fourier,
    /// `−∂² log` of the θ-type product.
    LogTheta,
    /// Image sum over the lattice `2πℤ + iβℤ`.
    Lattice,
}

fn inv_four_sin2(z: Complex64) -> Complex64 {
    let s = (z * 0.5).sin();
    Complex64::new(0.25, 0.0) / (s * s)
}

/// The regularized potential `V_ε(r)`; `conjugate` returns `conj V_ε(r) = V_ε(−r)`.
pub fn v_eps(
    r: f64,
    p: &EllipticParams,
    rep: VRep,
    conjugate: bool,
    tc: &TailControl,
) -> Result<Complex64> {
    check_regular(r, p.eps, "V_eps")?;
    let v = match rep {
        VRep::Fourier => c_eps(r, p, 2, tc)?,
        VRep::LogTheta => {
            let mut v = inv_four_sin2(Complex64::new(r, p.eps));
            let (sr, cr) = r.sin_cos();
            let q2 = p.q * p.q;
            let mut a = q2 * (-p.eps).exp();
            for _ in 0..tc.n_max {
                if a < tc.tail_tol {
                    break;
                }
                let f = 1.0 - 2.0 * a * cr + a * a;
                let f1 = 2.0 * a * sr;
                let f2 = 2.0 * a * cr;
                v -= (f2 * f - f1 * f1) / (f * f);
                a *= q2;
            }
            v
        }
        VRep::Lattice => {
            let mut v = inv_four_sin2(Complex64::new(r, p.eps));
            if p.q > 0.0 {
                let beta = p.beta();
                for m in 1..=tc.n_max {
                    let shift = beta * m as f64 + p.eps;
                    let t = inv_four_sin2(Complex64::new(r, shift))
                        + inv_four_sin2(Complex64::new(r, -shift));
                    v += t;
                    if t.norm() < tc.tail_tol * v.norm().max(1.0) {
                        break;
                    }
                }
            }
            v
        }
    };
    Ok(if conjugate { v.conj() } else { v })
}

/// The constant `1/12 − Σ_{m≥1} 1/(2 sinh²(βm/2))` relating `V` to `℘`.
pub fn wp_offset(q: f64, tc: &TailControl) -> Result<f64> {
    if !(0.0..1.0).contains(&q) {
        return invalid(format!("wp_offset needs 0 <= q < 1, got {q}"));
    }
    let mut s = 1.0 / 12.0;
    let q2 = q * q;
    let mut a = q2;
    for _ in 0..tc.n_max {
        if a < tc.tail_tol {
            break;
        }
        // 1/(2 sinh²(βm/2)) = 2a/(1−a)² with a = q^{2m}
        s -= 2.0 * a / ((1.0 - a) * (1.0 - a));
        a *= q2;
    }
    Ok(s)
}

/// `lim_{z→0}(V(z) − 1/z²)` by Richardson extrapolation from `z = 10⁻², 10⁻³`.
pub fn wp_offset_extrapolated(q: f64, tc: &TailControl) -> Result<f64> {
    let p = EllipticParams::new(q, 0.0, 1.0)?;
    let g = |z: f64| -> Result<f64> { Ok(v_eps(z, &p, VRep::LogTheta, false, tc)?.re - 1.0 / (z * z)) };
    Ok(crate::numerics::richardson(g(1e-2)?, g(1e-3)?, 10.0, 2))
}

/// Regularized kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kernel {
    Sgn,
    Delta,
    DeltaPlus,
    DeltaMinus,
    J,
    CapDeltaPlus,
    CapDeltaMinus,
}

/// `2πδ⁺_ε(r) = Σ_{n≥1} e^{inr−nε}` in closed form.
fn two_pi_delta_plus(r: f64, eps: f64) -> Complex64 {
    let z = (I * r - eps).exp();
    z / (1.0 - z)
}

/// `k`-th derivative of the regularized delta function `δ_ε`, `k ≤ 2`.
pub fn delta_deriv(r: f64, eps: f64, k: u8) -> Result<f64> {
    check_regular(r, eps, "delta")?;
    let z = (I * r - eps).exp();
    let one = Complex64::new(1.0, 0.0);
    let w = one - z;
    let v = match k {
        0 => 1.0 + 2.0 * (z / w).re,
        1 => 2.0 * (I * z / (w * w)).re,
        2 => 2.0 * (-z * (one + z) / (w * w * w)).re,
        _ => return invalid("delta derivatives up to order 2"),
    };
    Ok(v / (2.0 * PI))
}

/// `j_ε(r) = 2 Σ |s_n|² sin(nr) e^{−nε}`.
pub fn j_eps(r: f64, q: f64, eps: f64, tc: &TailControl) -> f64 {
    // equals minus the first-derivative q-part of C_ε
    -c_eps_q_part(r, q, eps, 1, tc)
}

/// Evaluates a regularized kernel at `r`.
pub fn reg_kernel(r: f64, p: &EllipticParams, kind: Kernel, tc: &TailControl) -> Result<Complex64> {
    check_regular(r, p.eps, "regularized kernel")?;
    let eps = p.eps;
    Ok(match kind {
        Kernel::Sgn => {
            // (1/π)(r + 2 Σ sin(nr) e^{−nε}/n) = (1/π)(r + 2 Im(−log(1 − z)))
            let s = c_eps_leading(r, eps, 0, tc).im;
            Complex64::new((r + 2.0 * s) / PI, 0.0)
        }
        Kernel::Delta => Complex64::new(delta_deriv(r, eps, 0)?, 0.0),
        Kernel::DeltaPlus => two_pi_delta_plus(r, eps) / (2.0 * PI),
        Kernel::DeltaMinus => two_pi_delta_plus(r, eps).conj() / (2.0 * PI),
        Kernel::J => Complex64::new(j_eps(r, p.q, eps, tc), 0.0),
        Kernel::CapDeltaPlus => {
            Complex64::new(0.5, 0.0) + two_pi_delta_plus(r, eps) + I * j_eps(r, p.q, eps, tc)
        }
        Kernel::CapDeltaMinus => {
            Complex64::new(0.5, 0.0) + two_pi_delta_plus(r, eps).conj()
                - I * j_eps(r, p.q, eps, tc)
        }
    })
}

/// `sgn_ε` with the mode sum cut at `n ≤ m_cut` (used against mode-truncated Fock spaces).
pub fn sgn_truncated(r: f64, eps: f64, m_cut: usize) -> f64 {
    let s: f64 = (1..=m_cut)
        .map(|n| {
            let nf = n as f64;
            (nf * r).sin() * (-nf * eps).exp() / nf
        })
        .sum();
    (r + 2.0 * s) / PI
}

/// Maximal residuals of the three kernel identities for `Δ±`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Del3Report {
    /// `Δ⁻ + Δ⁺ = 2πδ`.
    pub sum: f64,
    /// `(Δ⁻)² − (Δ⁺)² = 2πiδ′ − 4πi jδ`.
    pub squares: f64,
    /// `(Δ⁻)³ + (Δ⁺)³ = −πδ″ + πδ/2 + 6π jδ′ − 6π j²δ`.
    pub cubes: f64,
    /// The cube identity with an imaginary unit on the `jδ′` term; kept for comparison.
    pub cubes_imaginary_variant: f64,
}

impl Del3Report {
    pub fn max(&self) -> f64 {
        self.sum.max(self.squares).max(self.cubes)
    }
}

/// Evaluates the three `Δ±` identities on a grid of `r` values.
pub fn verify_del3(p: &EllipticParams, grid: &[f64], tc: &TailControl) -> Result<Del3Report> {
    if !(p.eps > 0.0) {
        return invalid("kernel identities need eps > 0");
    }
    let mut rep = Del3Report { sum: 0.0, squares: 0.0, cubes: 0.0, cubes_imaginary_variant: 0.0 };
    for &r in grid {
        let dp = reg_kernel(r, p, Kernel::CapDeltaPlus, tc)?;
        let dm = reg_kernel(r, p, Kernel::CapDeltaMinus, tc)?;
        let d0 = delta_deriv(r, p.eps, 0)?;
        let d1 = delta_deriv(r, p.eps, 1)?;
        let d2 = delta_deriv(r, p.eps, 2)?;
        let j = j_eps(r, p.q, p.eps, tc);
        let id1 = dm + dp - 2.0 * PI * d0;
        let id2 = dm * dm - dp * dp - (I * 2.0 * PI * d1 - I * 4.0 * PI * j * d0);
        let lhs3 = dm * dm * dm + dp * dp * dp;
        let common = -PI * d2 + 0.5 * PI * d0 - 6.0 * PI * j * j * d0;
        let id3 = lhs3 - (common + 6.0 * PI * j * d1);
        let id3i = lhs3 - (common + I * 6.0 * PI * j * d1);
        rep.sum = rep.sum.max(id1.norm());
        rep.squares = rep.squares.max(id2.norm());
        rep.cubes = rep.cubes.max(id3.norm());
        rep.cubes_imaginary_variant = rep.cubes_imaginary_variant.max(id3i.norm());
    }
    Ok(rep)
}

/// Product vs series `b_ε` over a grid of `r`, `q` and `ε`; relative error.
pub fn b_backend_check(rs: &[f64], qs: &[f64], epss: &[f64], tol: f64, tc: &TailControl) -> Result<crate::report::Check> {
    let mut worst: f64 = 0.0;
    for &q in qs {
        for &eps in epss {
            let p = EllipticParams::new(q, eps, 1.0)?;
            for &r in rs {
                let a = b_eps(r, &p, BBackend::Product, tc)?;
                let b = b_eps(r, &p, BBackend::Series, tc)?;
                worst = worst.max((a - b).norm() / a.norm());
            }
        }
    }
    Ok(crate::report::Check::new("b_backends_agree", worst, tol)
        .param("n_r", rs.len())
        .param("q", qs.to_vec())
        .param("eps", epss.to_vec()))
}

/// The three `V_ε` representations against each other, plus `V(π) = 1/4` at `q = ε = 0`.
pub fn v_rep_report(rs: &[f64], qs: &[f64], epss: &[f64], tol: f64, tc: &TailControl) -> Result<crate::report::Report> {
    let mut worst: f64 = 0.0;
    for &q in qs {
        for &eps in epss {
            let p = EllipticParams::new(q, eps, 1.0)?;
            for &r in rs {
                let f = v_eps(r, &p, VRep::Fourier, false, tc)?;
                let l = v_eps(r, &p, VRep::LogTheta, false, tc)?;
                let t = v_eps(r, &p, VRep::Lattice, false, tc)?;
                let s = f.norm().max(1e-300);
                worst = worst.max((f - l).norm() / s).max((f - t).norm() / s);
            }
        }
    }
    let p0 = EllipticParams::new(0.0, 0.0, 1.0)?;
    let mut trig: f64 = 0.0;
    for rep in [VRep::Fourier, VRep::LogTheta, VRep::Lattice] {
        trig = trig.max((v_eps(PI, &p0, rep, false, tc)? - Complex64::new(0.25, 0.0)).norm());
    }
    let mut r = crate::report::Report::new();
    r.push(
        crate::report::Check::new("v_representations_agree", worst, tol)
            .param("n_r", rs.len())
            .param("q", qs.to_vec())
            .param("eps", epss.to_vec()),
    );
    r.push(crate::report::Check::new("v_trigonometric_limit", trig, 4.0 * f64::EPSILON));
    Ok(r)
}

/// Extrapolated `lim_{z→0}(V(z) − 1/z²)` against the closed-form offset.
pub fn wp_offset_check(qs: &[f64], tol: f64, tc: &TailControl) -> Result<crate::report::Check> {
    let mut worst: f64 = 0.0;
    for &q in qs {
        worst = worst.max((wp_offset_extrapolated(q, tc)? - wp_offset(q, tc)?).abs());
    }
    Ok(crate::report::Check::new("wp_offset", worst, tol).param("q", qs.to_vec()))
}

/// The three `Δ±` identities on a grid as a check.
pub fn del3_check(p: &EllipticParams, n_grid: usize, tol: f64, tc: &TailControl) -> Result<crate::report::Check> {
    let rep = verify_del3(p, &circle_grid(n_grid), tc)?;
    Ok(crate::report::Check::new("del3_identities", rep.max(), tol)
        .param("q", p.q)
        .param("eps", p.eps)
        .param("n_grid", n_grid)
        .param("sum", rep.sum)
        .param("squares", rep.squares)
        .param("cubes", rep.cubes)
        .param("cubes_imaginary_variant", rep.cubes_imaginary_variant))
}

/// `n` equally spaced points on `[−π, π)`.
pub fn circle_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| -PI + 2.0 * PI * k as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tc() -> TailControl {
        TailControl::default()
    }

    /// Plain term-by-term mode sum, used as an oracle for the closed-form splits.
    fn c_eps_naive(r: f64, q: f64, eps: f64, k: i32, n_terms: usize) -> Complex64 {
        (1..=n_terms)
            .map(|n| {
                let nf = n as f64;
                let e = (-nf * eps).exp();
                ((I * nf).powi(k) * cn2(n, q) * (I * nf * r).exp()
                    + (-I * nf).powi(k) * sn2(n, q) * (-I * nf * r).exp())
                    * e
                    / nf
            })
            .sum()
    }

    #[test]
    fn params_validation() {
        assert!(EllipticParams::new(1.0, 0.1, 1.0).is_err());
        assert!(EllipticParams::new(0.3, -0.1, 1.0).is_err());
        assert!(EllipticParams::new(0.3, 0.1, -1.0).is_err());
        let p = EllipticParams::from_nu(0.3, 0.1, 2f64.sqrt()).unwrap();
        assert!((p.lambda - 2.0).abs() < 1e-15);
        assert!((p.gamma() - 4.0).abs() < 1e-14);
        assert!(EllipticParams::new(0.0, 0.0, 2.0).unwrap().beta().is_infinite());
    }

    #[test]
    fn theta_values() {
        assert_eq!(theta(PI, 0.0, &tc()), 1.0);
        assert_eq!(theta(0.0, 0.4, &tc()), 0.0);
        let fine = TailControl { tail_tol: 1e-32, n_max: 1024 };
        assert!((theta(1.0, 0.5, &tc()) - theta(1.0, 0.5, &fine)).abs() < 1e-12);
        for r in [0.3, 1.7, -2.4] {
            assert!((theta(r + 2.0 * PI, 0.3, &tc()) + theta(r, 0.3, &tc())).abs() < 1e-14);
        }
    }

    #[test]
    fn c_eps_classical_log() {
        let p = EllipticParams::new(0.0, 0.0, 1.0).unwrap();
        let c = c_eps(PI, &p, 0, &tc()).unwrap();
        assert!((c - Complex64::new(-(2f64.ln()), 0.0)).norm() < 1e-14);
        assert!(c_eps(0.0, &p, 0, &tc()).is_err());
        assert!(c_eps(2.0 * PI, &p, 1, &tc()).is_err());
    }

    #[test]
    fn c_eps_matches_naive_sum() {
        for &(q, eps) in &[(0.0, 0.3), (0.3, 0.5), (0.5, 1.0), (0.2, 0.05), (0.4, 3.0)] {
            let p = EllipticParams::new(q, eps, 1.0).unwrap();
            for &r in &[-2.9, -0.4, 0.0, 1.2, 3.1] {
                for k in 0..3u8 {
                    let a = c_eps(r, &p, k, &tc()).unwrap();
                    let b = c_eps_naive(r, q, eps, k as i32, 4000);
                    assert!((a - b).norm() < 1e-11 * b.norm().max(1.0), "q={q} eps={eps} r={r} k={k}");
                }
            }
        }
    }

    #[test]
    fn b_backends_agree() {
        let p = EllipticParams::new(0.3, 0.4, 1.0).unwrap();
        let a = b_eps(0.7, &p, BBackend::Product, &tc()).unwrap();
        let b = b_eps(0.7, &p, BBackend::Series, &tc()).unwrap();
        assert!((a - b).norm() < 1e-12 * a.norm());
        let p = EllipticParams::new(0.3, 0.5, 1.0).unwrap();
        let via_c = (-I * 0.6 - c_eps(1.2, &p, 0, &tc()).unwrap()).exp();
        assert!((via_c - b_eps(1.2, &p, BBackend::Product, &tc()).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn b_trigonometric_limit() {
        let p = EllipticParams::new(0.0, 0.0, 1.0).unwrap();
        for r in [0.5, 2.0, -1.0] {
            let b = b_eps(r, &p, BBackend::Product, &tc()).unwrap();
            assert!((b - (-I * 2.0 * (0.5 * r).sin())).norm() < 1e-15);
            let s = b_eps(r, &p, BBackend::Series, &tc()).unwrap();
            assert!((s - b).norm() < 1e-13);
        }
        assert_eq!(b_eps(0.0, &p, BBackend::Product, &tc()).unwrap().norm(), 0.0);
        assert!(b_eps(0.0, &p, BBackend::Series, &tc()).is_err());
    }

    #[test]
    fn v_representations_agree() {
        let p = EllipticParams::new(0.25, 0.3, 1.0).unwrap();
        let f = v_eps(0.9, &p, VRep::Fourier, false, &tc()).unwrap();
        let l = v_eps(0.9, &p, VRep::LogTheta, false, &tc()).unwrap();
        let t = v_eps(0.9, &p, VRep::Lattice, false, &tc()).unwrap();
        assert!((f - l).norm() < 1e-10 * f.norm());
        assert!((f - t).norm() < 1e-10 * f.norm());
    }

    #[test]
    fn v_trigonometric_limit() {
        let p = EllipticParams::new(0.0, 0.0, 1.0).unwrap();
        for rep in [VRep::Fourier, VRep::LogTheta, VRep::Lattice] {
            let v = v_eps(PI, &p, rep, false, &tc()).unwrap();
            assert!((v - Complex64::new(0.25, 0.0)).norm() < 1e-15, "{rep:?}");
        }
    }

    #[test]
    fn v_conjugate_is_reflection() {
        let p = EllipticParams::new(0.3, 0.2, 1.0).unwrap();
        for r in [0.4, -1.1, 2.5] {
            for rep in [VRep::Fourier, VRep::LogTheta, VRep::Lattice] {
                let a = v_eps(r, &p, rep, true, &tc()).unwrap();
                let b = v_eps(-r, &p, rep, false, &tc()).unwrap();
                assert!((a - b).norm() < 1e-14 * a.norm().max(1.0));
            }
        }
    }

    #[test]
    fn v_is_periodic_at_zero_eps() {
        let p = EllipticParams::new(0.3, 0.0, 1.0).unwrap();
        for r in [0.4, -1.1, 2.5] {
            let a = v_eps(r, &p, VRep::LogTheta, false, &tc()).unwrap();
            let b = v_eps(r + 2.0 * PI, &p, VRep::LogTheta, false, &tc()).unwrap();
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn v_is_second_derivative_of_c() {
        let p = EllipticParams::new(0.3, 0.4, 1.0).unwrap();
        let h = 1e-4;
        for r in [0.2, 1.5, -2.2] {
            let c = |x: f64| c_eps(x, &p, 0, &tc()).unwrap();
            let fd = (c(r + h) - c(r) * 2.0 + c(r - h)) / (h * h);
            let v = v_eps(r, &p, VRep::Fourier, false, &tc()).unwrap();
            assert!((fd - v).norm() < 1e-6 * v.norm().max(1.0));
        }
    }

    #[test]
    fn c_derivative_matches_fd() {
        let p = EllipticParams::new(0.3, 0.5, 1.0).unwrap();
        let h = 1e-5;
        for r in [0.1, 1.9, -3.0] {
            let fd = (c_eps(r + h, &p, 0, &tc()).unwrap() - c_eps(r - h, &p, 0, &tc()).unwrap())
                / (2.0 * h);
            assert!((fd - c_eps(r, &p, 1, &tc()).unwrap()).norm() < 1e-8);
        }
    }

    #[test]
    fn grid_checks() {
        let rs: Vec<f64> = (0..8).map(|k| -3.0 + 0.77 * k as f64).collect();
        assert!(b_backend_check(&rs, &[0.0, 0.3], &[0.2, 1.0], 1e-10, &tc()).unwrap().pass);
        assert!(v_rep_report(&rs, &[0.0, 0.3], &[0.2, 1.0], 1e-10, &tc()).unwrap().pass());
        assert!(wp_offset_check(&[0.0, 0.2], 1e-6, &tc()).unwrap().pass);
    }

    #[test]
    fn wp_offset_values() {
        assert_eq!(wp_offset(0.0, &tc()).unwrap(), 1.0 / 12.0);
        let w = wp_offset(0.3, &tc()).unwrap();
        assert!(w < 1.0 / 12.0);
        let beta = -2.0 * 0.3f64.ln();
        let direct: f64 = 1.0 / 12.0
            - (1..60).map(|m| 0.5 / (0.5 * beta * m as f64).sinh().powi(2)).sum::<f64>();
        assert!((w - direct).abs() < 1e-14);
        assert!((wp_offset_extrapolated(0.3, &tc()).unwrap() - w).abs() < 1e-6);
        assert!(wp_offset(1.0, &tc()).is_err());
    }

    #[test]
    fn kernels_basic() {
        let p = EllipticParams::new(0.2, 0.5, 1.0).unwrap();
        assert!(reg_kernel(0.0, &p, Kernel::Sgn, &tc()).unwrap().norm() < 1e-16);
        // trapezoid integral of δ_ε over one period
        let n = 2048;
        let integral: f64 = circle_grid(n)
            .iter()
            .map(|&r| reg_kernel(r, &p, Kernel::Delta, &tc()).unwrap().re)
            .sum::<f64>()
            * 2.0 * PI
            / n as f64;
        assert!((integral - 1.0).abs() < 1e-8);
        for r in [-2.0, 0.3, 1.4] {
            let s = reg_kernel(r, &p, Kernel::CapDeltaPlus, &tc()).unwrap()
                + reg_kernel(r, &p, Kernel::CapDeltaMinus, &tc()).unwrap();
            let d = reg_kernel(r, &p, Kernel::Delta, &tc()).unwrap();
            assert!((s - d * 2.0 * PI).norm() < 1e-10);
        }
    }

    #[test]
    fn kernels_match_series_definitions() {
        let (q, eps) = (0.3, 0.4);
        let p = EllipticParams::new(q, eps, 1.0).unwrap();
        for r in [-2.5, 0.7, 2.9] {
            let terms = 400;
            let sum = |f: &dyn Fn(f64) -> f64| (1..=terms).map(|n| f(n as f64)).sum::<f64>();
            let sgn = (r + 2.0 * sum(&|n| (n * r).sin() * (-n * eps).exp() / n)) / PI;
            let dl = (1.0 + 2.0 * sum(&|n| (n * r).cos() * (-n * eps).exp())) / (2.0 * PI);
            let d1 = -2.0 * sum(&|n| n * (n * r).sin() * (-n * eps).exp()) / (2.0 * PI);
            let d2 = -2.0 * sum(&|n| n * n * (n * r).cos() * (-n * eps).exp()) / (2.0 * PI);
            let j = 2.0 * sum(&|n| sn2(n as usize, q) * (n * r).sin() * (-n * eps).exp());
            let dp: Complex64 = (1..=terms)
                .map(|n| (I * n as f64 * r - n as f64 * eps).exp())
                .sum::<Complex64>()
                / (2.0 * PI);
            assert!((reg_kernel(r, &p, Kernel::Sgn, &tc()).unwrap().re - sgn).abs() < 1e-13);
            assert!((delta_deriv(r, eps, 0).unwrap() - dl).abs() < 1e-13);
            assert!((delta_deriv(r, eps, 1).unwrap() - d1).abs() < 1e-12);
            assert!((delta_deriv(r, eps, 2).unwrap() - d2).abs() < 1e-11);
            assert!((j_eps(r, q, eps, &tc()) - j).abs() < 1e-14);
            assert!((reg_kernel(r, &p, Kernel::DeltaPlus, &tc()).unwrap() - dp).norm() < 1e-13);
            assert!(
                (reg_kernel(r, &p, Kernel::DeltaMinus, &tc()).unwrap() - dp.conj()).norm() < 1e-13
            );
        }
    }

    #[test]
    fn sgn_derivative_is_twice_delta() {
        let p = EllipticParams::new(0.0, 0.3, 1.0).unwrap();
        let h = 1e-5;
        for r in [-1.0, 0.0, 0.5, 2.0] {
            let s = |x: f64| reg_kernel(x, &p, Kernel::Sgn, &tc()).unwrap().re;
            let fd = (s(r + h) - s(r - h)) / (2.0 * h);
            assert!((fd / 2.0 - delta_deriv(r, 0.3, 0).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn del3_identities() {
        let p = EllipticParams::new(0.2, 0.6, 1.0).unwrap();
        let rep = verify_del3(&p, &circle_grid(64), &tc()).unwrap();
        assert!(rep.sum < 1e-12);
        assert!(rep.squares < 1e-9, "{rep:?}");
        assert!(rep.cubes < 1e-9, "{rep:?}");
        assert!(rep.cubes_imaginary_variant > 1e-3);
    }

    #[test]
    fn del3_without_j() {
        // at q = 0 the difference of squares is 2πiδ′ alone
        let p = EllipticParams::new(0.0, 0.6, 1.0).unwrap();
        for r in circle_grid(16) {
            let dp = reg_kernel(r, &p, Kernel::CapDeltaPlus, &tc()).unwrap();
            let dm = reg_kernel(r, &p, Kernel::CapDeltaMinus, &tc()).unwrap();
            let d1 = delta_deriv(r, 0.6, 1).unwrap();
            assert!((dm * dm - dp * dp - I * 2.0 * PI * d1).norm() < 1e-12);
        }
    }

    #[test]
    fn sgn_truncated_matches_full_sum() {
        let p = EllipticParams::new(0.0, 0.8, 1.0).unwrap();
        let full = reg_kernel(1.0, &p, Kernel::Sgn, &tc()).unwrap().re;
        assert!((sgn_truncated(1.0, 0.8, 200) - full).abs() < 1e-14);
        assert!((sgn_truncated(1.0, 0.8, 5) - full).abs() > 1e-4);
    }

    proptest! {
        #[test]
        fn b_backends_agree_randomly(r in -PI..PI, q in 0.0f64..0.6, eps in 0.05f64..1.5) {
            let p = EllipticParams::new(q, eps, 1.0).unwrap();
            let a = b_eps(r, &p, BBackend::Product, &tc()).unwrap();
            let b = b_eps(r, &p, BBackend::Series, &tc()).unwrap();
            prop_assert!((a - b).norm() < 1e-10 * a.norm().max(1e-3));
        }

        #[test]
        fn v_representations_agree_randomly(r in -PI..PI, q in 0.0f64..0.6, eps in 0.05f64..1.5) {
            let p = EllipticParams::new(q, eps, 1.0).unwrap();
            let f = v_eps(r, &p, VRep::Fourier, false, &tc()).unwrap();
            let l = v_eps(r, &p, VRep::LogTheta, false, &tc()).unwrap();
            let t = v_eps(r, &p, VRep::Lattice, false, &tc()).unwrap();
            prop_assert!((f - l).norm() < 1e-10 * f.norm().max(1.0));
            prop_assert!((f - t).norm() < 1e-10 * f.norm().max(1.0));
        }

        #[test]
        fn c_prime_matches_fd(r in -PI..PI, q in 0.0f64..0.5, eps in 0.1f64..1.0) {
            let p = EllipticParams::new(q, eps, 1.0).unwrap();
            let h = 1e-5;
            let fd = (c_eps(r + h, &p, 0, &tc()).unwrap() - c_eps(r - h, &p, 0, &tc()).unwrap()) / (2.0 * h);
            let an = c_eps(r, &p, 1, &tc()).unwrap();
            prop_assert!((fd - an).norm() < 1e-6 * an.norm().max(1.0));
        }
    }
}
