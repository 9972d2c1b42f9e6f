//! The differential identity satisfied by the anyon correlation function
//! `F_N^{ε,ε′}(x; y)`, in regularized form and in the `ε → 0` θ-function form.
//!
//! `log F = λ[Σ_{j<k} Lb_{2ε}(x_k − x_j) + Σ_{j<k} Lb_{2ε′}(y_j − y_k) − Σ_{j,k} Lb_{ε+ε′}(x_j − y_k)]`
//! with `Lb = log b = −ir/2 − C`, so `Lb″ = −V`.

use crate::elliptic::{c_eps, log_b, theta, theta_log_derivs, v_eps, EllipticParams, TailControl, VRep};
use crate::error::{invalid, Result};
use crate::numerics::neville_to_zero;
use crate::report::{Check, Report};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Arguments of `F_N^{ε,ε′}(x; y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityRequest {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub eps: f64,
    pub eps_prime: f64,
    pub params: EllipticParams,
}

impl IdentityRequest {
    pub fn new(x: Vec<f64>, y: Vec<f64>, eps: f64, eps_prime: f64, params: EllipticParams) -> Result<Self> {
        if x.len() != y.len() || x.is_empty() {
            return invalid("x and y must be nonempty and of equal length");
        }
        if !(eps >= 0.0 && eps_prime >= 0.0) {
            return invalid("regulators must be non-negative");
        }
        Ok(Self { x, y, eps, eps_prime, params })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn with_eps(&self, eps: f64, eps_prime: f64) -> Self {
        Self { eps, eps_prime, ..self.clone() }
    }

    fn lam(&self) -> f64 {
        self.params.nu * self.params.nu
    }
}

/// `log F` with gradients and Laplacians `ΔF/F = Σ_j[(∂_j log F)² + ∂²_j log F]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogFDerivs {
    pub log_f: Complex64,
    pub grad_x: Vec<Complex64>,
    pub grad_y: Vec<Complex64>,
    pub lap_x: Complex64,
    pub lap_y: Complex64,
}

/// `Lb_e(r)` and its first two derivatives.
fn lb3(r: f64, p: &EllipticParams, e: f64, tc: &TailControl) -> Result<[Complex64; 3]> {
    let pe = p.with_eps(e);
    Ok([log_b(r, &pe, 0, tc)?, log_b(r, &pe, 1, tc)?, log_b(r, &pe, 2, tc)?])
}

pub fn log_f_and_derivs(req: &IdentityRequest, tc: &TailControl) -> Result<LogFDerivs> {
    let n = req.n();
    let p = &req.params;
    let lam = req.lam();
    let (ex, ey, exy) = (2.0 * req.eps, 2.0 * req.eps_prime, req.eps + req.eps_prime);
    let mut log_f = ZERO;
    let mut gx = vec![ZERO; n];
    let mut gy = vec![ZERO; n];
    let mut hx = vec![ZERO; n];
    let mut hy = vec![ZERO; n];
    for j in 0..n {
        for k in j + 1..n {
            // Lb(x_k − x_j)
            let [l0, l1, l2] = lb3(req.x[k] - req.x[j], p, ex, tc)?;
            log_f += l0;
            gx[k] += l1;
            gx[j] -= l1;
            hx[k] += l2;
            hx[j] += l2;
            // Lb(y_j − y_k)
            let [m0, m1, m2] = lb3(req.y[j] - req.y[k], p, ey, tc)?;
            log_f += m0;
            gy[j] += m1;
            gy[k] -= m1;
            hy[j] += m2;
            hy[k] += m2;
        }
    }
    for j in 0..n {
        for k in 0..n {
            let [l0, l1, l2] = lb3(req.x[j] - req.y[k], p, exy, tc)?;
            log_f -= l0;
            gx[j] -= l1;
            gy[k] += l1;
            hx[j] -= l2;
            hy[k] -= l2;
        }
    }
    let scale = |v: &mut Vec<Complex64>| v.iter_mut().for_each(|z| *z *= lam);
    scale(&mut gx);
    scale(&mut gy);
    scale(&mut hx);
    scale(&mut hy);
    let lap = |g: &[Complex64], h: &[Complex64]| g.iter().zip(h).map(|(a, b)| a * a + b).sum();
    Ok(LogFDerivs { log_f: log_f * lam, lap_x: lap(&gx, &hx), lap_y: lap(&gy, &hy), grad_x: gx, grad_y: gy })
}

/// `ρ/F = [conj(H_N^{2ε})(x) − H_N^{2ε′}(y)]F / F`.
pub fn identity_residual_over_f(req: &IdentityRequest, tc: &TailControl) -> Result<Complex64> {
    if !(req.eps > 0.0 && req.eps_prime > 0.0) {
        return invalid("the regularized identity needs eps, eps' > 0");
    }
    let d = log_f_and_derivs(req, tc)?;
    let lam = req.lam();
    let g = 2.0 * lam * (lam - 1.0);
    let p = &req.params;
    let (px, py) = (p.with_eps(2.0 * req.eps), p.with_eps(2.0 * req.eps_prime));
    let mut pot = ZERO;
    for j in 0..req.n() {
        for k in j + 1..req.n() {
            pot += v_eps(req.x[j] - req.x[k], &px, VRep::Fourier, true, tc)?;
            pot -= v_eps(req.y[j] - req.y[k], &py, VRep::Fourier, false, tc)?;
        }
    }
    Ok(-d.lap_x + d.lap_y + pot * g)
}

/// One row of the `ε`-convergence table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub max_residual: f64,
    /// `log(r_{k−1}/r_k) / log(ε_{k−1}/ε_k)`; `None` on the first row.
    pub order_estimate: Option<f64>,
}

/// Maximum of `|ρ|/|F|` over configurations for each `ε = ε′` in `eps_list`.
pub fn residual_convergence(configs: &[IdentityRequest], eps_list: &[f64], tc: &TailControl) -> Result<Vec<ConvergenceRow>> {
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &e in eps_list {
        let vals: Vec<Result<f64>> =
            configs.par_iter().map(|c| identity_residual_over_f(&c.with_eps(e, e), tc).map(|z| z.norm())).collect();
        let mut worst: f64 = 0.0;
        for v in vals {
            worst = worst.max(v?);
        }
        let order = rows.last().map(|prev| (prev.max_residual / worst).ln() / (prev.eps / e).ln());
        rows.push(ConvergenceRow { eps: e, max_residual: worst, order_estimate: order });
    }
    Ok(rows)
}

/// Residual report: values at each `ε`, monotone decrease, minimal order, and
/// the Neville extrapolation of `ρ/F` to `ε = 0` for every configuration.
pub fn residual_convergence_report(
    configs: &[IdentityRequest],
    eps_list: &[f64],
    min_order: f64,
    extrapolation_tol: f64,
    tc: &TailControl,
) -> Result<(Report, Vec<ConvergenceRow>)> {
    let rows = residual_convergence(configs, eps_list, tc)?;
    let mut r = Report::new();
    let monotone = rows.windows(2).all(|w| w[1].max_residual < w[0].max_residual);
    r.push(
        Check::new("residual_monotone_decrease", if monotone { 0.0 } else { 1.0 }, 0.0)
            .param("eps", eps_list.to_vec())
            .param("residuals", rows.iter().map(|x| x.max_residual).collect::<Vec<_>>()),
    );
    // local orders approach the asymptotic one from below; extrapolate them in ε
    let (oe, ov): (Vec<f64>, Vec<Complex64>) = rows
        .iter()
        .filter_map(|row| row.order_estimate.map(|o| (row.eps, Complex64::new(o, 0.0))))
        .unzip();
    if !oe.is_empty() {
        let (p_inf, err) = neville_to_zero(&oe, &ov);
        let mut c = Check::expect_above("residual_empirical_order", p_inf.re + err, min_order)
            .param("extrapolated_order", p_inf.re)
            .param("order_uncertainty", err)
            .param("local_orders", ov.iter().map(|z| z.re).collect::<Vec<_>>());
        c.residual = p_inf.re;
        r.push(c);
    }
    let mut worst_extrap: f64 = 0.0;
    for c in configs {
        let vals: Result<Vec<Complex64>> = eps_list.iter().map(|&e| identity_residual_over_f(&c.with_eps(e, e), tc)).collect();
        let (v0, _) = neville_to_zero(eps_list, &vals?);
        worst_extrap = worst_extrap.max(v0.norm());
    }
    r.push(Check::new("residual_extrapolated_limit", worst_extrap, extrapolation_tol).param("configs", configs.len()));
    Ok((r, rows))
}

/// `log F_N` at `ε = 0` from `θ`, with `∂²` of `F` over `F` for each side.
fn theta_sides(x: &[f64], y: &[f64], p: &EllipticParams, tc: &TailControl) -> Result<(Complex64, Complex64)> {
    let n = x.len();
    let lam = p.nu * p.nu;
    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    let mut hx = vec![0.0; n];
    let mut hy = vec![0.0; n];
    let mut pot = 0.0;
    for j in 0..n {
        for k in j + 1..n {
            let (a1, a2) = theta_log_derivs(x[k] - x[j], p.q, tc)?;
            gx[k] += a1;
            gx[j] -= a1;
            hx[k] += a2;
            hx[j] += a2;
            let (b1, b2) = theta_log_derivs(y[j] - y[k], p.q, tc)?;
            gy[j] += b1;
            gy[k] -= b1;
            hy[j] += b2;
            hy[k] += b2;
            // V = −(log θ)″
            pot += -a2 + b2;
        }
    }
    for j in 0..n {
        for k in 0..n {
            let (c1, c2) = theta_log_derivs(x[j] - y[k], p.q, tc)?;
            gx[j] -= c1;
            gy[k] += c1;
            hx[j] -= c2;
            hy[k] -= c2;
        }
    }
    let lap = |g: &[f64], h: &[f64]| -> f64 { g.iter().zip(h).map(|(a, b)| lam * lam * a * a + lam * b).sum() };
    let lhs = lap(&gx, &hx) - lap(&gy, &hy);
    let rhs = 2.0 * lam * (lam - 1.0) * pot;
    Ok((Complex64::new(lhs, 0.0), Complex64::new(rhs, 0.0)))
}

/// Relative residual of `Σ(∂²_x − ∂²_y)F = 2λ(λ−1)Σ(V(x_k − x_j) − V(y_j − y_k))F`.
pub fn theta_identity_check(x: &[f64], y: &[f64], p: &EllipticParams, tc: &TailControl) -> Result<f64> {
    if x.len() != y.len() || x.is_empty() {
        return invalid("x and y must be nonempty and of equal length");
    }
    let (l, r) = theta_sides(x, y, p, tc)?;
    Ok((l - r).norm() / l.norm().max(r.norm()).max(1.0))
}

/// `|F_N(x; y)|` from `θ`, used to validate the log-derivative path.
pub fn theta_f(x: &[f64], y: &[f64], p: &EllipticParams, tc: &TailControl) -> f64 {
    let lam = p.nu * p.nu;
    let n = x.len();
    let mut logf = 0.0;
    for j in 0..n {
        for k in j + 1..n {
            logf += lam * (theta(x[k] - x[j], p.q, tc).abs().ln() + theta(y[j] - y[k], p.q, tc).abs().ln());
        }
    }
    for xj in x {
        for yk in y {
            logf -= lam * theta(xj - yk, p.q, tc).abs().ln();
        }
    }
    logf.exp()
}

/// Random configurations with every pairwise distance at least `min_gap` mod 2π.
pub fn random_configs(n: usize, count: usize, min_gap: f64, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let pts: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-PI..PI)).collect();
        let ok = (0..2 * n).all(|a| {
            (a + 1..2 * n).all(|b| {
                let d = (pts[a] - pts[b]).rem_euclid(2.0 * PI);
                d.min(2.0 * PI - d) >= min_gap
            })
        });
        if ok {
            out.push((pts[..n].to_vec(), pts[n..].to_vec()));
        }
    }
    out
}

/// `max |θ-identity residual|` over random configurations.
pub fn theta_identity_sweep(n: usize, lambda: f64, q: f64, count: usize, seed: u64, tol: f64) -> Result<Check> {
    let p = EllipticParams::new(q, 0.0, lambda)?;
    let tc = TailControl::default();
    let mut worst: f64 = 0.0;
    for (x, y) in random_configs(n, count, 0.05, seed) {
        worst = worst.max(theta_identity_check(&x, &y, &p, &tc)?);
    }
    Ok(Check::new("theta_identity", worst, tol)
        .param("N", n)
        .param("lambda", lambda)
        .param("q", q)
        .param("configs", count)
        .param("seed", seed))
}

/// Largest deviation of the analytic derivative paths from central differences.
///
/// Covers `C′` and `C″ = V` against differences of `C`, and the gradients and
/// Laplacians of `log F` against differences of `log F`.
pub fn gradient_checks(p: &EllipticParams, n: usize, count: usize, seed: u64, tol: f64) -> Result<Report> {
    let tc = TailControl::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-4;
    let mut worst_c1: f64 = 0.0;
    let mut worst_v: f64 = 0.0;
    for _ in 0..count {
        let r = rng.random_range(-PI..PI);
        let c = |t: f64| c_eps(r + t, p, 0, &tc);
        let fd1 = (c(-2.0 * h)? - c(2.0 * h)? + (c(h)? - c(-h)?) * 8.0) / (12.0 * h);
        let fd2 = (c(h)? * 16.0 + c(-h)? * 16.0 - c(2.0 * h)? - c(-2.0 * h)? - c(0.0)? * 30.0) / (12.0 * h * h);
        let a1 = c_eps(r, p, 1, &tc)?;
        let v = v_eps(r, p, VRep::Fourier, false, &tc)?;
        worst_c1 = worst_c1.max((a1 - fd1).norm() / a1.norm().max(1.0));
        worst_v = worst_v.max((v - fd2).norm() / v.norm().max(1.0));
    }
    let mut worst_g: f64 = 0.0;
    let mut worst_l: f64 = 0.0;
    for (x, y) in random_configs(n, count, 0.3, seed ^ 0x5eed) {
        let req = IdentityRequest::new(x, y, p.eps, p.eps, *p)?;
        let d = log_f_and_derivs(&req, &tc)?;
        let lf = |r: &IdentityRequest| log_f_and_derivs(r, &tc).map(|d| d.log_f);
        for side in 0..2 {
            let mut lap_fd = ZERO;
            for j in 0..n {
                let shifted = |t: f64| -> Result<Complex64> {
                    let mut r2 = req.clone();
                    if side == 0 {
                        r2.x[j] += t;
                    } else {
                        r2.y[j] += t;
                    }
                    lf(&r2)
                };
                let (m2, m1, p1, p2, c0) = (shifted(-2.0 * h)?, shifted(-h)?, shifted(h)?, shifted(2.0 * h)?, d.log_f);
                let g_fd = (m2 - p2 + (p1 - m1) * 8.0) / (12.0 * h);
                let h_fd = (p1 * 16.0 + m1 * 16.0 - p2 - m2 - c0 * 30.0) / (12.0 * h * h);
                let g = if side == 0 { d.grad_x[j] } else { d.grad_y[j] };
                worst_g = worst_g.max((g - g_fd).norm() / g.norm().max(1.0));
                lap_fd += g_fd * g_fd + h_fd;
            }
            let lap = if side == 0 { d.lap_x } else { d.lap_y };
            worst_l = worst_l.max((lap - lap_fd).norm() / lap.norm().max(1.0));
        }
    }
    let mut r = Report::new();
    for (name, v) in [
        ("c_eps_first_derivative", worst_c1),
        ("v_eps_second_derivative", worst_v),
        ("log_f_gradient", worst_g),
        ("log_f_laplacian", worst_l),
    ] {
        r.push(
            Check::new(name, v, tol)
                .param("q", p.q)
                .param("eps", p.eps)
                .param("fd_step", h)
                .param("seed", seed),
        );
    }
    Ok(r)
}
