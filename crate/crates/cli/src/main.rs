mod args;
mod commands;
mod config;
mod output;

use args::{Cli, Command, Common, Format};
use clap::error::ErrorKind;
use clap::Parser;
use ecs_spectra::Error;
use output::Outcome;
use serde::Serialize;
use serde_json::Value;
use std::ffi::OsString;
use std::process::ExitCode;
use std::time::Instant;

const THREADS_ENV: &str = "ECS_SPECTRA_THREADS";

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    eprintln!("usage: ecs-spectra <COMMAND> [OPTIONS]  (see --help)");
    ExitCode::from(2)
}

fn init_threads(c: &Common) -> Result<(), String> {
    let n = match c.threads {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(s) => Some(s.trim().parse::<usize>().map_err(|_| format!("{THREADS_ENV} must be a positive integer, got {s:?}"))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err("thread count must be positive".into());
        }
        // a second initialization only happens in-process (tests) and is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn dispatch<A: Serialize>(name: &str, args: &A, common: &Common, f: impl Fn(&A) -> ecs_spectra::Result<Outcome>) -> ExitCode {
    if let Err(e) = init_threads(common) {
        return usage_error(&e);
    }
    let mut params = serde_json::to_value(args).expect("arguments serialize");
    if let Value::Object(m) = &mut params {
        m.insert("threads".into(), serde_json::json!(rayon::current_num_threads()));
    }
    let t0 = Instant::now();
    let out = match f(args) {
        Ok(o) => o,
        Err(Error::InvalidParameter(m)) => return usage_error(&m),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let wall = t0.elapsed().as_secs_f64();
    let format = common.format.unwrap_or_else(|| match &common.out {
        Some(p) if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) => Format::Csv,
        _ => Format::Json,
    });
    let text = match format {
        Format::Json => output::render_json(name, &params, &out, wall),
        Format::Csv => output::render_csv(name, &params, &out),
    };
    match &common.out {
        Some(p) => {
            if let Err(e) = std::fs::write(p, text) {
                eprintln!("error: cannot write {}: {e}", p.display());
                return ExitCode::from(1);
            }
            for c in &out.report.checks {
                println!("{} {} residual={:e} tolerance={:e}", if c.pass { "PASS" } else { "FAIL" }, c.check_name, c.residual, c.tolerance);
            }
        }
        None => print!("{text}"),
    }
    if out.report.pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run(argv: Vec<OsString>) -> ExitCode {
    let argv = match config::expand_argv(argv) {
        Ok(a) => a,
        Err(e) => return usage_error(&e),
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    ExitCode::SUCCESS
                }
                _ => {
                    let _ = e.print();
                    ExitCode::from(2)
                }
            };
        }
    };
    match &cli.command {
        Command::Elliptic(a) => dispatch("elliptic", a, &a.common, commands::elliptic),
        Command::Identity(a) => dispatch("identity", a, &a.common, commands::identity),
        Command::Corr(a) => dispatch("corr", a, &a.common, commands::corr),
        Command::FockVerify(a) => dispatch("fock-verify", a, &a.common, commands::fock_verify),
        Command::HamiltonianVerify(a) => dispatch("hamiltonian-verify", a, &a.common, commands::hamiltonian),
        Command::Thermal(a) => dispatch("thermal", a, &a.common, commands::thermal),
        Command::Spectrum(a) => dispatch("spectrum", a, &a.common, commands::spectrum),
        Command::Fhat(a) => dispatch("fhat", a, &a.common, commands::fhat),
    }
}

fn main() -> ExitCode {
    run(std::env::args_os().collect())
}
