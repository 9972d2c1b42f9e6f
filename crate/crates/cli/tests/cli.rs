use serde_json::Value;
use std::fs;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ecs-spectra"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("ECS_SPECTRA_THREADS").output().expect("binary runs")
}

fn json_of(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is json")
}

fn strip_wall_time(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("wall_time_s");
    v
}

#[test]
fn spectrum_csv_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eig.csv");
    let o = run(&["spectrum", "--N", "2", "--lambda", "2", "--q", "0.1", "--nmax", "12", "--sector", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    let head = lines.next().unwrap();
    assert!(head.starts_with('#') && head.contains("seed=1") && head.contains("\"nmax\":12"));
    assert_eq!(lines.next().unwrap(), "N,lambda,q,sector,index,eigenvalue,drift");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    let ev: f64 = first[5].parse().unwrap();
    // 2 + O(q²)
    assert!((ev - 2.0).abs() < 0.1, "{ev}");
    assert!(first[6].parse::<f64>().unwrap() < 1e-6);
}

#[test]
fn identity_csv_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("conv.csv");
    let o = run(&["identity", "--N", "2", "--lambda", "2", "--q", "0.2", "--eps", "0.2,0.1,0.05", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(2).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    let res: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(res.windows(2).all(|w| w[1] < w[0]), "{res:?}");
    assert_eq!(rows[0][2], "");
}

#[test]
fn elliptic_del3_json() {
    let o = run(&["elliptic", "--check", "del3", "--q", "0.2", "--eps", "0.6"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_of(&o);
    for k in ["tool_version", "command", "params", "checks", "wall_time_s"] {
        assert!(v.get(k).is_some(), "missing {k}");
    }
    assert_eq!(v["command"], "elliptic");
    assert_eq!(v["checks"][0]["name"], "del3_identities");
    assert_eq!(v["checks"][0]["pass"], true);
    assert_eq!(v["params"]["seed"], 1);
}

#[test]
fn unknown_flag_is_usage_error() {
    let o = run(&["spectrum", "--bogus", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    assert!(o.stdout.is_empty());
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn invalid_parameter_is_usage_error() {
    let o = run(&["spectrum", "--q", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("q"));
}

#[test]
fn failing_check_exits_one() {
    // a tolerance nobody can meet
    let o = run(&["elliptic", "--check", "wp-offset", "--tol", "1e-30"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json_of(&o)["checks"][0]["pass"], false);
}

#[test]
fn config_file_and_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# spectrum settings\nN=1\nlambda = 3\nnmax=4\nq=0\nno-filter=true\n").unwrap();
    let o = run(&["spectrum", "--config", cfg.to_str().unwrap(), "--lambda", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_of(&o);
    assert_eq!(v["params"]["N"], 1);
    assert_eq!(v["params"]["nmax"], 4);
    assert_eq!(v["params"]["lambda"], 2.0);
    assert_eq!(v["params"]["no_filter"], true);
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "bogus=1\n").unwrap();
    assert_eq!(run(&["spectrum", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["spectrum", "--config", "/nonexistent/x.cfg"]).status.code(), Some(2));
}

#[test]
fn deterministic_payload() {
    let args = ["fock-verify", "--specs", "3", "--seed", "9"];
    let a = strip_wall_time(json_of(&run(&args)));
    let b = strip_wall_time(json_of(&run(&args)));
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a["params"]["seed"], 9);
}

#[test]
fn threads_flag_and_env() {
    let o = run(&["fhat", "--n", "-1", "--x", "0.4", "--q", "0", "--threads", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json_of(&o)["params"]["threads"], 2);
    let e = bin().args(["fhat", "--n", "-1", "--x", "0.4", "--q", "0"]).env("ECS_SPECTRA_THREADS", "3").output().unwrap();
    assert_eq!(json_of(&e)["params"]["threads"], 3);
    let bad = bin().args(["fhat", "--n", "-1", "--x", "0.4"]).env("ECS_SPECTRA_THREADS", "many").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn negative_list_values_parse() {
    let o = run(&["fhat", "--n", "0,0", "--x", "-0.7,0.9", "--q", "0.1", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = String::from_utf8(o.stdout).unwrap();
    assert_eq!(s.lines().nth(1), Some("fhat_re,fhat_im"));
}

#[test]
fn help_exits_zero() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("spectrum"));
}
