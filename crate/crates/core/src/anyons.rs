//! Regularized anyons `φ^μ_ε(x)` as vertex operators, their correlation functions,
//! and the Fock-space brute force used to cross-check them.
//!
//! With `J(α) = Σ α_n β(−n)`, the anyon `φ^μ_ε(x)` has winding `w = μ`,
//! `α_n = −iμν e^{−inx−|n|ε}/n` for `n ≠ 0` and `α₀ = −μν²x`.

use crate::elliptic::{log_b, sgn_truncated, EllipticParams, TailControl};
use crate::error::{invalid, Error, Result};
use crate::fock::{apply_vertex, vertex_matrix_element, FockBasis, FockVector, RepCoeffs, VertexSpec};
use crate::report::{rel_dev, Check, Report};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// One anyon insertion `φ^μ_ε(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnyonSpec {
    pub mu: i32,
    pub x: f64,
    pub eps: f64,
}

impl AnyonSpec {
    pub fn new(mu: i32, x: f64, eps: f64) -> Self {
        Self { mu, x, eps }
    }

    pub fn adjoint(&self) -> Self {
        Self { mu: -self.mu, ..*self }
    }
}

/// An ordered product `⟨Ω| φ₁ ⋯ φ_k Ω⟩`; `params` supplies `q` and `ν`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorRequest {
    pub specs: Vec<AnyonSpec>,
    pub params: EllipticParams,
}

impl CorrelatorRequest {
    pub fn new(specs: Vec<AnyonSpec>, params: EllipticParams) -> Result<Self> {
        if specs.is_empty() {
            return invalid("correlator needs at least one insertion");
        }
        Ok(Self { specs, params })
    }

    pub fn total_charge(&self) -> i32 {
        self.specs.iter().map(|s| s.mu).sum()
    }
}

/// Vertex data of `φ^μ_ε(x)` truncated to modes `|n| ≤ M`.
pub fn anyon_to_vertex(a: &AnyonSpec, nu: f64, mode_cutoff: usize) -> Result<VertexSpec> {
    if !(a.eps > 0.0) {
        return invalid("anyon vertex data needs eps > 0");
    }
    let mut v = VertexSpec::new(mode_cutoff, a.mu);
    if a.mu == 0 {
        return Ok(v);
    }
    let mn = a.mu as f64 * nu;
    for n in 1..=mode_cutoff as i32 {
        let nf = n as f64;
        let damp = (-nf * a.eps).exp() / nf;
        // α_{±n} = −iμν e^{∓inx−nε}/(±n)
        v.set_alpha(n, -I * mn * Complex64::from_polar(damp, -nf * a.x))?;
        v.set_alpha(-n, I * mn * Complex64::from_polar(damp, nf * a.x))?;
    }
    v.set_alpha(0, Complex64::new(-mn * nu * a.x, 0.0))?;
    Ok(v)
}

/// Pair factors `((j, k), μ_jμ_kν² log b_{ε_j+ε_k}(x_j − x_k))` for `j < k`.
pub fn correlator_log_factors(req: &CorrelatorRequest, tc: &TailControl) -> Result<Vec<((usize, usize), Complex64)>> {
    let s = &req.specs;
    let lam = req.params.nu * req.params.nu;
    let mut out = Vec::new();
    for j in 0..s.len() {
        for k in j + 1..s.len() {
            let e = s[j].eps + s[k].eps;
            let r = s[j].x - s[k].x;
            if e <= 0.0 && (r.rem_euclid(2.0 * PI)).min(2.0 * PI - r.rem_euclid(2.0 * PI)) < 1e-14 {
                return Err(Error::Singular(format!("coincident points {j}, {k} with zero regulator")));
            }
            let lb = log_b(r, &req.params.with_eps(e), 0, tc)?;
            out.push(((j, k), lb * (s[j].mu * s[k].mu) as f64 * lam));
        }
    }
    Ok(out)
}

/// `δ_{Σμ,0} ∏_{j<k} b_{ε_j+ε_k}(x_j − x_k)^{μ_jμ_kν²}`.
pub fn correlator_closed(req: &CorrelatorRequest, tc: &TailControl) -> Result<Complex64> {
    if req.total_charge() != 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let logs = correlator_log_factors(req, tc)?;
    Ok(logs.iter().map(|(_, l)| l).sum::<Complex64>().exp())
}

/// Bound on the omitted modes `n > M` and levels `> L` for the brute force.
pub fn truncation_tail(req: &CorrelatorRequest, basis: &FockBasis) -> f64 {
    let eps = req.specs.iter().map(|s| s.eps).fold(f64::INFINITY, f64::min);
    let mu2 = req.specs.iter().map(|s| (s.mu * s.mu) as f64).fold(0.0, f64::max);
    let m1 = (basis.mode_cutoff() + 1) as f64;
    let q2 = req.params.q.powi(2 * (basis.mode_cutoff() as i32 + 1));
    let k = req.specs.len() as f64;
    let mode = k * k * mu2 * req.params.lambda * (-2.0 * eps * m1).exp() / (m1 * (1.0 - (-2.0 * eps).exp()))
        * (1.0 + q2)
        / (1.0 - q2);
    let level = k * (-eps * (basis.level_cutoff() + 1) as f64).exp();
    mode + level
}

/// `⟨Ω|Φ₁ ⋯ Φ_k Ω⟩` by applying the truncated vertex operators right to left.
pub fn correlator_oracle(req: &CorrelatorRequest, basis: &FockBasis, rep: &RepCoeffs, tol: f64) -> Result<Complex64> {
    let tail = truncation_tail(req, basis);
    if tail > tol {
        return Err(Error::TruncationInsufficient { tail, tol });
    }
    if rep.mode_cutoff() != basis.mode_cutoff() {
        return invalid("representation and basis mode cutoffs differ");
    }
    let omega = FockVector::vacuum(basis);
    let mut v = omega.clone();
    for s in req.specs.iter().rev() {
        let spec = anyon_to_vertex(s, req.params.nu, basis.mode_cutoff())?;
        v = apply_vertex(basis, &spec, rep, &v);
    }
    Ok(omega.inner(&v))
}

/// Closed form of `F_N^{ε,ε′}(x; y)` as the quotient of three pair products.
pub fn f_n_closed(x: &[f64], y: &[f64], eps: f64, eps_p: f64, p: &EllipticParams, tc: &TailControl) -> Result<Complex64> {
    if x.len() != y.len() {
        return invalid("x and y must have the same length");
    }
    let n = x.len();
    let lam = p.nu * p.nu;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        for k in j + 1..n {
            acc += log_b(x[k] - x[j], &p.with_eps(2.0 * eps), 0, tc)? * lam;
            acc += log_b(y[j] - y[k], &p.with_eps(2.0 * eps_p), 0, tc)? * lam;
        }
    }
    for xj in x {
        for yk in y {
            acc -= log_b(xj - yk, &p.with_eps(eps + eps_p), 0, tc)? * lam;
        }
    }
    Ok(acc.exp())
}

/// The request `φ(x_N)* ⋯ φ(x_1)* φ(y_1) ⋯ φ(y_N)` behind `F_N`.
pub fn f_n_request(x: &[f64], y: &[f64], eps: f64, eps_p: f64, p: &EllipticParams) -> Result<CorrelatorRequest> {
    let mut specs: Vec<AnyonSpec> = x.iter().rev().map(|&xi| AnyonSpec::new(-1, xi, eps)).collect();
    specs.extend(y.iter().map(|&yi| AnyonSpec::new(1, yi, eps_p)));
    CorrelatorRequest::new(specs, *p)
}

/// Exchange relation `φ(x)φ(y) = e^{−iπν² sgn_{2ε}(x−y)} φ(y)φ(x)` on matrix elements.
///
/// Both products are evaluated through the multiplication rule, so the check is
/// exact at the mode cutoff `M` when `sgn` is cut at the same `M`. A second
/// residual composes the truncated operators directly and is limited by the level cutoff.
pub fn exchange_check(x: f64, y: f64, eps: f64, p: &EllipticParams, basis: &FockBasis, max_level: usize) -> Result<Report> {
    let m = basis.mode_cutoff();
    let rep = RepCoeffs::from_q(p.q, m)?;
    let a = anyon_to_vertex(&AnyonSpec::new(1, x, eps), p.nu, m)?;
    let b = anyon_to_vertex(&AnyonSpec::new(1, y, eps), p.nu, m)?;
    let ab = a.combine(&b);
    let pref = |u: &VertexSpec, v: &VertexSpec| {
        (-u.jm_jp(v, &rep) + I * (u.alpha0() * v.w as f64 - v.alpha0() * u.w as f64) / 2.0).exp()
    };
    let (p_xy, p_yx) = (pref(&a, &b), pref(&b, &a));
    let phase = (-I * PI * p.lambda * sgn_truncated(x - y, 2.0 * eps, m)).exp();
    let low = basis.low_levels(max_level);
    let mut worst: f64 = 0.0;
    let mut worst_comp: f64 = 0.0;
    let w = basis.winding_cutoff();
    for &kw in &[-1i32, 0] {
        if (kw + 2).abs() > w || kw.abs() > w {
            continue;
        }
        for &ki in &low {
            let ket = basis.osc_state(ki, kw, 0);
            let kv = FockVector::from_state(basis, &ket)?;
            let xy = apply_vertex(basis, &a, &rep, &apply_vertex(basis, &b, &rep, &kv));
            let yx = apply_vertex(basis, &b, &rep, &apply_vertex(basis, &a, &rep, &kv));
            for &bi in &low {
                let bra = basis.osc_state(bi, kw + 2, 0);
                let e = vertex_matrix_element(&bra, &ab, &ket, &rep);
                let lhs = p_xy * e;
                let rhs = phase * p_yx * e;
                worst = worst.max((lhs - rhs).norm());
                let cl = xy.amplitude(basis, &bra);
                let cr = phase * yx.amplitude(basis, &bra);
                worst_comp = worst_comp.max((cl - cr).norm());
            }
        }
    }
    let mut r = Report::new();
    r.push(
        Check::new("exchange_matrix_elements", worst, 1e-10)
            .param("x", x)
            .param("y", y)
            .param("eps", eps)
            .param("lambda", p.lambda)
            .param("q", p.q)
            .param("M", m),
    );
    r.push(
        Check::new("exchange_truncated_composition", worst_comp, 1e-6)
            .param("L", basis.level_cutoff())
            .param("phase_re", phase.re)
            .param("phase_im", phase.im),
    );
    Ok(r)
}

/// Closed form vs brute force for a list of requests, as a report.
pub fn correlator_report(reqs: &[CorrelatorRequest], basis: &FockBasis, tol: f64, tc: &TailControl) -> Result<Report> {
    let mut r = Report::new();
    for (i, req) in reqs.iter().enumerate() {
        let rep = RepCoeffs::from_q(req.params.q, basis.mode_cutoff())?;
        let closed = correlator_closed(req, tc)?;
        let oracle = correlator_oracle(req, basis, &rep, tol * 1e-2)?;
        let charges: Vec<i32> = req.specs.iter().map(|s| s.mu).collect();
        let pos: Vec<f64> = req.specs.iter().map(|s| s.x).collect();
        r.push(
            Check::new(format!("correlator[{i}]"), rel_dev(oracle, closed, 1e-300), tol)
                .param("charges", charges)
                .param("positions", pos)
                .param("eps", req.specs[0].eps)
                .param("q", req.params.q)
                .param("lambda", req.params.lambda)
                .param("value_re", closed.re)
                .param("value_im", closed.im)
                .param("oracle_re", oracle.re)
                .param("oracle_im", oracle.im),
        );
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tc() -> TailControl {
        TailControl::default()
    }

    #[test]
    fn vertex_data() {
        let v = anyon_to_vertex(&AnyonSpec::new(0, 0.3, 0.5), 1.3, 4).unwrap();
        assert_eq!(v, VertexSpec::identity(4));
        let nu = 2f64.sqrt();
        let a = AnyonSpec::new(1, 0.7, 0.4);
        let v = anyon_to_vertex(&a, nu, 6).unwrap();
        for n in 1..=6i32 {
            let want = nu * (-0.4 * n as f64).exp() / n as f64;
            assert!((v.alpha(n).norm() - want).abs() < 1e-15);
            assert!((v.alpha(-n).norm() - want).abs() < 1e-15);
        }
        let adj = v.adjoint();
        let minus = anyon_to_vertex(&a.adjoint(), nu, 6).unwrap();
        assert_eq!(adj.w, minus.w);
        for n in -6..=6 {
            assert!((adj.alpha(n) - minus.alpha(n)).norm() < 1e-15);
        }
        assert!(anyon_to_vertex(&AnyonSpec::new(1, 0.0, 0.0), nu, 3).is_err());
    }

    #[test]
    fn closed_form_basics() {
        let p = EllipticParams::new(0.3, 0.0, 2.0).unwrap();
        let single = CorrelatorRequest::new(vec![AnyonSpec::new(1, 0.2, 0.5)], p).unwrap();
        assert_eq!(correlator_closed(&single, &tc()).unwrap(), Complex64::new(0.0, 0.0));
        // ⟨φ*(x)φ(y)⟩ = b_{2ε}(x−y)^{−λ}
        let (x, y, e) = (0.9, -0.4, 0.3);
        let pair = CorrelatorRequest::new(vec![AnyonSpec::new(-1, x, e), AnyonSpec::new(1, y, e)], p).unwrap();
        let want = (-log_b(x - y, &p.with_eps(2.0 * e), 0, &tc()).unwrap() * 2.0).exp();
        assert!((correlator_closed(&pair, &tc()).unwrap() - want).norm() < 1e-14);
    }

    #[test]
    fn f_n_two_paths() {
        let p = EllipticParams::new(0.2, 0.0, 1.5).unwrap();
        let x = [0.3, -1.1, 2.0];
        let y = [0.1, 1.4, -2.5];
        for (e, ep) in [(0.2, 0.3), (0.5, 0.5)] {
            let a = f_n_closed(&x, &y, e, ep, &p, &tc()).unwrap();
            let b = correlator_closed(&f_n_request(&x, &y, e, ep, &p).unwrap(), &tc()).unwrap();
            assert!((a - b).norm() < 1e-12 * a.norm());
        }
        // order of the x-pair arguments matters: b is not even
        let swapped = f_n_closed(&[x[1], x[0]], &y[..2], 0.2, 0.3, &p, &tc()).unwrap();
        let kept = f_n_closed(&x[..2], &y[..2], 0.2, 0.3, &p, &tc()).unwrap();
        assert!((swapped - kept).norm() > 1e-3 * kept.norm());
    }

    #[test]
    fn palindromic_request_is_positive() {
        let p = EllipticParams::new(0.25, 0.0, 2.0).unwrap();
        let fwd = vec![AnyonSpec::new(1, 0.4, 0.3), AnyonSpec::new(-1, -1.2, 0.3)];
        let mut specs: Vec<AnyonSpec> = fwd.iter().rev().map(|s| s.adjoint()).collect();
        specs.extend(fwd);
        let v = correlator_closed(&CorrelatorRequest::new(specs, p).unwrap(), &tc()).unwrap();
        assert!(v.re > 0.0 && v.im.abs() < 1e-12 * v.re);
    }

    #[test]
    fn oracle_pair_small() {
        let p = EllipticParams::from_nu(0.3, 0.0, 1.0).unwrap();
        let basis = FockBasis::new(8, 16, 2).unwrap();
        let rep = RepCoeffs::from_q(0.3, 8).unwrap();
        let req = CorrelatorRequest::new(vec![AnyonSpec::new(-1, 0.5, 1.0), AnyonSpec::new(1, -0.7, 1.0)], p).unwrap();
        let o = correlator_oracle(&req, &basis, &rep, 1e-5).unwrap();
        let c = correlator_closed(&req, &tc()).unwrap();
        assert!(rel_dev(o, c, 1e-300) < 1e-6, "{o} {c}");
        let bad = CorrelatorRequest::new(vec![AnyonSpec::new(1, 0.5, 1.0), AnyonSpec::new(1, -0.7, 1.0)], p).unwrap();
        assert_eq!(correlator_oracle(&bad, &basis, &rep, 1e-5).unwrap(), Complex64::new(0.0, 0.0));
        let tight = correlator_oracle(&req, &basis, &rep, 1e-12);
        assert!(matches!(tight, Err(Error::TruncationInsufficient { .. })));
    }

    #[test]
    fn exchange_relation() {
        let p = EllipticParams::new(0.3, 0.0, 2.0).unwrap();
        let basis = FockBasis::new(10, 14, 2).unwrap();
        let r = exchange_check(1.0, 0.0, 0.8, &p, &basis, 2).unwrap();
        assert!(r.get("exchange_matrix_elements").unwrap().pass, "{:?}", r);
        let same = exchange_check(0.4, 0.4, 0.8, &p, &basis, 1).unwrap();
        assert!(same.get("exchange_matrix_elements").unwrap().residual < 1e-14);
    }

    #[test]
    fn fermion_limit_phase() {
        // λ = 1: e^{−iπ sgn_{2ε}(r)} → −1 as ε → 0 for r ≠ 0
        let ph = (-I * PI * sgn_truncated(1.0, 2e-4, 200_000)).exp();
        assert!((ph + 1.0).norm() < 1e-2);
    }
}
