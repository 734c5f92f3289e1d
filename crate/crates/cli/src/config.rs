use std::path::Path;

use anyhow::{bail, Context, Result};
use toml::Value;

const SUBCOMMANDS: [&str; 10] = [
    "gen", "route", "failures", "impact", "critical", "encode", "validate", "upgrade", "te",
    "report",
];

fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

fn given(args: &[String], flag: &str) -> bool {
    args.iter()
        .any(|a| a == flag || a.strip_prefix(flag).is_some_and(|r| r.starts_with('=')))
}

fn scalar(key: &str, v: &Value) -> Result<String> {
    Ok(match v {
        Value::String(s) => s.clone(),
        Value::Integer(i) => i.to_string(),
        Value::Float(x) => x.to_string(),
        other => bail!("config key `{key}`: unsupported value {other}"),
    })
}

/// Inserts flags from the `--config` file that the command line does not
/// already set. Keys are flag names, `_` and `-` interchangeable.
pub fn merge(args: Vec<String>) -> Result<Vec<String>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .with_context(|| format!("reading config {path}"))?;
    let table: toml::Table = text.parse().with_context(|| format!("parsing config {path}"))?;
    let Some(at) = args.iter().position(|a| SUBCOMMANDS.contains(&a.as_str())) else {
        return Ok(args);
    };
    let mut extra = Vec::new();
    for (key, value) in &table {
        let flag = format!("--{}", key.replace('_', "-"));
        if key == "config" || given(&args, &flag) {
            continue;
        }
        match value {
            Value::Boolean(true) => extra.push(flag),
            Value::Boolean(false) => {}
            Value::Array(items) => {
                extra.push(flag);
                for item in items {
                    extra.push(scalar(key, item)?);
                }
            }
            v => extra.push(format!("{flag}={}", scalar(key, v)?)),
        }
    }
    let mut out = args;
    out.splice(at + 1..at + 1, extra);
    Ok(out)
}
