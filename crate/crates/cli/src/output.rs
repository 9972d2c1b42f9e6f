//! JSON and CSV rendering of a finished run.

use ecs_spectra::report::fmt17;
use ecs_spectra::Report;
use serde_json::{json, Value};

/// Rows for the CSV output of a command.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

/// What a subcommand produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    /// Command-specific data for the JSON `results` field.
    pub results: Value,
    /// CSV rows; the check list is used when absent.
    pub table: Option<Table>,
}

pub fn render_json(command: &str, params: &Value, out: &Outcome, wall_time_s: f64) -> String {
    let checks: Vec<Value> = out
        .report
        .checks
        .iter()
        .map(|c| json!({"name": c.check_name, "residual": c.residual, "tolerance": c.tolerance, "pass": c.pass}))
        .collect();
    let details: serde_json::Map<String, Value> =
        out.report.checks.iter().map(|c| (c.check_name.clone(), json!(c.parameters))).collect();
    let doc = json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "params": params,
        "checks": checks,
        "wall_time_s": wall_time_s,
        "results": {"data": out.results, "check_parameters": details},
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
    s.push('\n');
    s
}

/// Numbers in CSV cells: 17 significant digits; non-finite values spelled out.
pub fn num(x: f64) -> String {
    fmt17(x)
}

pub fn render_csv(command: &str, params: &Value, out: &Outcome) -> String {
    let seed = params.get("seed").cloned().unwrap_or(Value::Null);
    let mut s = format!(
        "# ecs-spectra {} command={command} seed={seed} params={}\n",
        env!("CARGO_PKG_VERSION"),
        serde_json::to_string(params).expect("params serialize")
    );
    let table = out.table.clone().unwrap_or_else(|| Table {
        header: vec!["name", "residual", "tolerance", "pass"],
        rows: out
            .report
            .checks
            .iter()
            .map(|c| vec![c.check_name.clone(), num(c.residual), num(c.tolerance), c.pass.to_string()])
            .collect(),
    });
    s.push_str(&table.header.join(","));
    s.push('\n');
    for r in &table.rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}
