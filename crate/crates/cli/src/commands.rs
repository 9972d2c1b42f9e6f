//! One function per subcommand; each returns the checks and its data table.

use crate::args::*;
use crate::output::{num, Outcome, Table};
use ecs_spectra::anyons::{correlator_report, exchange_check, f_n_request};
use ecs_spectra::elliptic::{b_backend_check, circle_grid, del3_check, v_rep_report, wp_offset_check};
use ecs_spectra::fock::{monomial_family, thermal_identity_check};
use ecs_spectra::hamiltonian::{
    build_bundle, crucial_control_report, calc_vertex_random_report, rest_gap_report, rest_gap_scan, sq1_report, sq2_report, sq2_value,
    Sq1Options,
};
use ecs_spectra::identity::{gradient_checks, residual_convergence_report, random_configs, theta_identity_sweep, IdentityRequest};
use ecs_spectra::spectral::{
    delta, eval_fhat, p_single_q0, q0_exactness_report, solve_window, theorem_report, Backend, CouplingWeight, E0Offset,
    FhatMethod, SolveOptions, WindowDomain,
};
use ecs_spectra::{Check, EllipticParams, FockBasis, MomentumVector, RepCoeffs, Report, Result, SpectralWindow, TailControl};
use serde_json::{json, Value};

fn tail(c: &Common) -> TailControl {
    TailControl { tail_tol: c.tail_tol, ..TailControl::default() }
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn elliptic(a: &EllipticArgs) -> Result<Outcome> {
    let tc = tail(&a.common);
    let grid_q = a.q.clone().unwrap_or_else(|| vec![0.0, 0.1, 0.3, 0.5]);
    let grid_e = a.eps.clone().unwrap_or_else(|| vec![0.2, 0.5, 1.0]);
    let rs = circle_grid(a.n_r);
    let want = |c: EllipticCheck| a.check == c || a.check == EllipticCheck::All;
    let mut r = Report::new();
    if want(EllipticCheck::BBackends) {
        r.push(b_backend_check(&rs, &grid_q, &grid_e, a.tol.unwrap_or(1e-10), &tc)?);
    }
    if want(EllipticCheck::VReps) {
        r.extend(v_rep_report(&rs, &grid_q, &grid_e, a.tol.unwrap_or(1e-10), &tc)?);
    }
    if want(EllipticCheck::WpOffset) {
        let qs = a.q.clone().unwrap_or_else(|| vec![0.0, 0.2, 0.4]);
        r.push(wp_offset_check(&qs, a.tol.unwrap_or(1e-6), &tc)?);
    }
    if want(EllipticCheck::Del3) {
        let qs = a.q.clone().unwrap_or_else(|| vec![0.2]);
        let es = a.eps.clone().unwrap_or_else(|| vec![0.6]);
        for &q in &qs {
            for &e in &es {
                let p = EllipticParams::new(q, e, a.lambda)?;
                let mut c = del3_check(&p, a.n_grid, a.tol.unwrap_or(1e-9), &tc)?;
                if qs.len() * es.len() > 1 {
                    c.check_name = format!("{}[q={q},eps={e}]", c.check_name);
                }
                r.push(c);
            }
        }
    }
    Ok(Outcome { report: r, results: json!({}), table: None })
}

pub fn identity(a: &IdentityArgs) -> Result<Outcome> {
    let tc = tail(&a.common);
    let seed = a.common.seed;
    let first = *a.eps.first().ok_or_else(|| ecs_spectra::Error::InvalidParameter("--eps needs at least one value".into()))?;
    let p = EllipticParams::new(a.q, first, a.lambda)?;
    let configs: Vec<IdentityRequest> = random_configs(a.n, a.configs, a.min_gap, seed)
        .into_iter()
        .map(|(x, y)| IdentityRequest::new(x, y, first, first, p))
        .collect::<Result<_>>()?;
    let (mut r, rows) = residual_convergence_report(&configs, &a.eps, a.min_order, a.extrapolation_tol.unwrap_or(f64::INFINITY), &tc)?;
    let mut extrapolated = Value::Null;
    if a.extrapolation_tol.is_none() {
        if let Some(i) = r.checks.iter().position(|c| c.check_name == "residual_extrapolated_limit") {
            extrapolated = json!(r.checks.remove(i).residual);
        }
    }
    if a.theta_count > 0 {
        r.push(theta_identity_sweep(a.n, a.lambda, a.q, a.theta_count, seed, a.theta_tol)?);
    }
    if a.gradient_count > 0 {
        r.extend(gradient_checks(&p, a.n, a.gradient_count, seed, a.gradient_tol)?);
    }
    let table = Table {
        header: vec!["eps", "max_residual", "order_estimate"],
        rows: rows.iter().map(|x| vec![num(x.eps), num(x.max_residual), opt_num(x.order_estimate)]).collect(),
    };
    let conv: Vec<Value> = rows
        .iter()
        .map(|x| json!({"eps": x.eps, "max_residual": x.max_residual, "order_estimate": x.order_estimate}))
        .collect();
    let results = json!({"convergence": conv, "extrapolated_limit": extrapolated});
    Ok(Outcome { report: r, results, table: Some(table) })
}

pub fn corr(a: &CorrArgs) -> Result<Outcome> {
    let tc = tail(&a.common);
    if let Some(bad) = a.points.iter().find(|n| **n == 0 || **n % 2 == 1) {
        return Err(ecs_spectra::Error::InvalidParameter(format!("--points must be positive and even, got {bad}")));
    }
    let half_max = a.points.iter().max().copied().unwrap_or(2) / 2;
    let w = a.w.unwrap_or(half_max as i32 + 1);
    let basis = FockBasis::new(a.m, a.l, w)?;
    let mut r = Report::new();
    let mut data = Vec::new();
    for &nu in &a.nu {
        let p = EllipticParams::from_nu(a.q, a.eps, nu)?;
        for &pts in &a.points {
            let reqs = random_configs(pts / 2, a.configs, 0.5, a.common.seed)
                .into_iter()
                .map(|(x, y)| f_n_request(&x, &y, a.eps, a.eps, &p))
                .collect::<Result<Vec<_>>>()?;
            for mut c in correlator_report(&reqs, &basis, a.tol, &tc)?.checks {
                c.check_name = format!("{}[nu={nu},points={pts}]", c.check_name);
                let mut row = c.parameters.clone();
                row.insert("rel_dev".into(), json!(c.residual));
                data.push(json!(row));
                r.push(c);
            }
        }
    }
    Ok(Outcome { report: r, results: json!({ "correlators": data }), table: None })
}

pub fn fock_verify(a: &FockVerifyArgs) -> Result<Outcome> {
    let p = EllipticParams::new(a.q, 0.0, a.lambda)?;
    let basis = FockBasis::new(a.m, a.l, 2)?;
    let mut r = exchange_check(a.x, a.y, a.eps, &p, &basis, a.max_level)?;
    let lb = FockBasis::new(a.vertex_m, a.vertex_l, 2)?;
    let lrep = RepCoeffs::from_q(a.q, a.vertex_m)?;
    r.extend(calc_vertex_random_report(&lb, &lrep, a.specs, a.common.seed, a.vertex_level, a.vertex_tol)?);
    r.extend(crucial_control_report(&RepCoeffs::from_q(a.q, a.crucial_m)?, a.crucial_tol, a.control_factor)?);
    Ok(Outcome { report: r, results: json!({}), table: None })
}

pub fn hamiltonian(a: &HamiltonianArgs) -> Result<Outcome> {
    if a.x.len() != a.y.len() {
        return Err(ecs_spectra::Error::InvalidParameter("--x and --y need the same length".into()));
    }
    let n = a.x.len();
    let p = EllipticParams::from_nu(a.q, a.eps, a.nu)?;
    let basis = FockBasis::new(a.m, a.l, n as i32)?;
    let rep = RepCoeffs::from_q(a.q, a.m)?;
    let bundle = build_bundle(&p, &basis, &rep)?;
    let opts = Sq1Options { fd_step: a.fd_step, ..Sq1Options::default() };
    let mut r = sq1_report(&bundle, &basis, &a.x, &opts, a.sq1_tol)?;
    r.extend(sq2_report(&bundle, &basis, &a.x, &a.y, a.eps_prime, a.sq2_tol, a.common.seed, a.control_factor)?);
    // at q = 0 the second relation holds to roundoff
    let p0 = EllipticParams::from_nu(0.0, a.eps, a.nu)?;
    let b0 = build_bundle(&p0, &basis, &RepCoeffs::trivial(a.m))?;
    let (v0, s0) = sq2_value(&b0, &basis, &a.x, &a.y, a.eps_prime)?;
    r.push(Check::new("sq2_q0_exact", v0.norm() / s0.max(1.0), 1e-13).param("term_scale", s0));
    let mut results = json!({});
    if a.gap_scan {
        // the smallest eps has e^{-M eps} = e^{-6}; the gap exponent does not need the tighter guard
        let scan = Sq1Options { tail_tol: 1e-2, ..opts };
        let rows = rest_gap_scan(&a.x, a.q, a.nu, &[(1.0, 14), (0.5, 20), (0.25, 24)], a.l, &scan)?;
        r.extend(rest_gap_report(&rows, a.gap_band));
        results = json!({"gap_scan": rows.iter().map(|g| json!({
            "eps": g.eps, "M": g.mode_cutoff, "gap": g.gap,
            "residual_with_rest": g.residual_with_rest, "residual_without_rest": g.residual_without_rest,
        })).collect::<Vec<_>>()});
    }
    Ok(Outcome { report: r, results, table: None })
}

pub fn thermal(a: &ThermalArgs) -> Result<Outcome> {
    let fam = monomial_family(a.max_mode, a.max_degree);
    let mut r = Report::new();
    let mut worst = Vec::new();
    for &q in &a.q {
        let rep = thermal_identity_check(q, &fam, a.m_max, a.tol)?;
        worst.push(json!({"q": q, "monomials": fam.len(), "max_residual": rep.max_residual(), "pass": rep.pass()}));
        r.extend(rep);
    }
    Ok(Outcome { report: r, results: json!(worst), table: None })
}

pub fn spectrum(a: &SpectrumArgs) -> Result<Outcome> {
    let tc = tail(&a.common);
    let mut win = SpectralWindow::new(a.n, a.nmax)?
        .with_domain(match a.domain {
            DomainArg::Box => WindowDomain::Box,
            DomainArg::Cone => WindowDomain::Cone,
        })
        .with_offset(match a.offset {
            OffsetArg::NPlusOne => E0Offset::NPlusOne,
            OffsetArg::NMinusOne => E0Offset::NMinusOne,
        })
        .with_weight(match a.weight {
            WeightArg::Nu => CouplingWeight::LiteralNu,
            WeightArg::Mode => CouplingWeight::ModeN,
        });
    if let Some(s) = a.sector {
        win = win.with_sector(s);
    }
    win.validate()?;
    let backend = match a.backend {
        BackendArg::Literal => Backend::Literal,
        BackendArg::FourierV => Backend::FourierV,
    };
    let mut opts = SolveOptions { k: a.k, ..SolveOptions::default() };
    if a.no_filter {
        opts.filter = None;
    } else if let Some(f) = opts.filter.as_mut() {
        f.seed = a.common.seed;
    }
    let e = solve_window(&win, a.lambda, a.q, backend, &opts, &tc)?;
    let mut r = Report::new();
    let d0 = e.drift.first().copied().unwrap_or(f64::NAN);
    r.push(
        Check::new("lowest_eigenvalue_drift", d0, a.drift_tol)
            .param("lowest", e.eigenvalues.first().copied().unwrap_or(f64::NAN))
            .param("dim", e.dim)
            .param("discarded", e.discarded)
            .param("triangular", e.triangular)
            .param("max_imag_part", e.imag_parts.iter().fold(0.0f64, |m, x| m.max(x.abs()))),
    );
    if a.q == 0.0 {
        r.extend(q0_exactness_report(&win, a.lambda, &tc)?);
    }
    let sector = a.sector.map(|s| s.to_string()).unwrap_or_else(|| "all".into());
    let rows = e
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, ev)| {
            vec![
                a.n.to_string(),
                num(a.lambda),
                num(a.q),
                sector.clone(),
                i.to_string(),
                num(*ev),
                opt_num(e.drift.get(i).copied()),
            ]
        })
        .collect();
    let results = json!({
        "eigenvalues": e.eigenvalues, "imag_parts": e.imag_parts, "drift": e.drift,
        "physical_ratio": e.physical_ratio, "dim": e.dim, "discarded": e.discarded,
        "dropped_lowering_weight": e.dropped_lowering_weight,
    });
    let table = Table { header: vec!["N", "lambda", "q", "sector", "index", "eigenvalue", "drift"], rows };
    Ok(Outcome { report: r, results, table: Some(table) })
}

pub fn fhat(a: &FhatArgs) -> Result<Outcome> {
    let tc = tail(&a.common);
    let n = MomentumVector::new(a.n.clone())?;
    let method = match a.method {
        FhatMethodArg::Contour => FhatMethod::Contour { grid: a.grid, sigma_max: a.sigma },
        FhatMethodArg::Eps => FhatMethod::EpsSequence { eps: a.eps.clone(), grid: a.grid, rel_tol: a.rel_tol },
    };
    let v = eval_fhat(&n, &a.x, a.lambda, a.q, &method, &tc)?;
    let mut r = Report::new();
    if a.n.len() == 1 && a.q == 0.0 {
        let d = delta(&a.x, a.lambda, a.q, &tc)?;
        let exact = p_single_q0(a.n[0], a.x[0], a.lambda) * d;
        r.push(Check::new("binomial_closed_form", (v - exact).norm() / exact.norm().max(1.0), 1e-10));
    }
    if a.theorem {
        r.extend(theorem_report(a.lambda, a.q, &[a.n.clone()], &a.x, a.theorem_tol, &tc)?);
    }
    let results: Value = json!({"fhat_re": v.re, "fhat_im": v.im});
    let table = Table { header: vec!["fhat_re", "fhat_im"], rows: vec![vec![num(v.re), num(v.im)]] };
    Ok(Outcome { report: r, results, table: Some(table) })
}
