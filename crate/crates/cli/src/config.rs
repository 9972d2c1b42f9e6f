//! `--config` files: `key=value` lines spliced in front of the command-line flags.

use std::ffi::OsString;
use std::fs;

/// Splits a config file into `--key=value` (or bare `--key` for `true`) tokens.
pub fn parse_config(text: &str) -> Result<Vec<OsString>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("config line {}: expected key=value, got {line:?}", i + 1))?;
        let key = k.trim().trim_start_matches("--");
        let val = v.trim();
        if key.is_empty() {
            return Err(format!("config line {}: empty key", i + 1));
        }
        if key == "config" {
            return Err(format!("config line {}: nested config files are not supported", i + 1));
        }
        match val {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            _ => out.push(format!("--{key}={val}").into()),
        }
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

/// Inserts the config tokens right after the subcommand so later flags override them.
pub fn expand_argv(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(sub) = argv.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')).map(|p| p + 1) else {
        return Ok(argv);
    };
    let Some(path) = config_path(&argv[sub + 1..]) else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read config {}: {e}", path.to_string_lossy()))?;
    let extra = parse_config(&text)?;
    let mut out: Vec<OsString> = argv[..=sub].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[sub + 1..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lines() {
        let t = parse_config("# c\n\nq = 0.3\n--lambda=2\nno-filter=true\ngap-scan=false\n").unwrap();
        let s: Vec<String> = t.iter().map(|x| x.to_string_lossy().into_owned()).collect();
        assert_eq!(s, ["--q=0.3", "--lambda=2", "--no-filter"]);
        assert!(parse_config("q 0.3").is_err());
        assert!(parse_config("config=x").is_err());
    }

    #[test]
    fn no_config_is_identity() {
        let a: Vec<OsString> = ["p", "spectrum", "--q", "0.1"].iter().map(OsString::from).collect();
        assert_eq!(expand_argv(a.clone()).unwrap(), a);
    }
}
