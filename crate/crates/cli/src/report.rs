use std::path::Path;

use anyhow::{bail, Context, Result};
use critfail::failure::{parse_impact_csv, ImpactRow};
use serde_json::Value;

use crate::commands::Output;
use crate::exit::UsageError;
use crate::ReportArgs;

/// Relative-error thresholds of the reroute-error CDF.
const ERROR_STEPS: [f64; 6] = [0.01, 0.02, 0.05, 0.1, 0.2, 0.5];

fn rows(path: &Path) -> Result<Vec<ImpactRow>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_impact_csv(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn run(out: &Output, a: &ReportArgs) -> Result<()> {
    if a.impact.is_empty() && a.compare.is_empty() && a.plan.is_empty() {
        return Err(UsageError("report needs --impact, --compare or --plan inputs".into()).into());
    }
    if !(a.bin_width > 0.0 && a.bin_width <= 1.0) {
        return Err(UsageError(format!("--bin-width must be in (0, 1], got {}", a.bin_width)).into());
    }
    if !a.impact.is_empty() {
        distribution(out, a)?;
    }
    if !a.compare.is_empty() {
        compare(out, &a.compare[0], &a.compare[1])?;
    }
    if !a.plan.is_empty() {
        constraint_counts(out, &a.plan)?;
    }
    Ok(())
}

/// Histogram of impact / max impact per table.
fn distribution(out: &Output, a: &ReportArgs) -> Result<()> {
    let bins = (1.0 / a.bin_width).round() as usize;
    let mut table = Vec::new();
    for path in &a.impact {
        let impacts: Vec<f64> = rows(path)?.iter().map(|r| r.record.impact).collect();
        let max = impacts.iter().copied().fold(0.0, f64::max);
        if impacts.is_empty() || max <= 0.0 {
            bail!("{}: no positive impacts", path.display());
        }
        let mut counts = vec![0usize; bins];
        for i in &impacts {
            let b = ((i / max) / a.bin_width) as usize;
            counts[b.min(bins - 1)] += 1;
        }
        let n = impacts.len() as f64;
        for (b, &c) in counts.iter().enumerate() {
            table.push(vec![
                path.display().to_string(),
                format!("{:.4}", b as f64 * a.bin_width),
                format!("{:.4}", ((b + 1) as f64 * a.bin_width).min(1.0)),
                c.to_string(),
                (c as f64 / n).to_string(),
            ]);
        }
        let high = impacts.iter().filter(|&&i| i / max >= 0.8).count();
        println!(
            "{}: {} scenarios, {:.2}% with ratio >= 0.8",
            path.display(),
            impacts.len(),
            100.0 * high as f64 / n
        );
    }
    out.write_csv(
        "impact_distribution.csv",
        &["file", "bin_lo", "bin_hi", "count", "fraction"],
        table,
    )?;
    Ok(())
}

/// Per-scenario relative error of the simplified reroute against the oracle.
fn compare(out: &Output, oracle: &Path, simplified: &Path) -> Result<()> {
    let o = rows(oracle)?;
    let s = rows(simplified)?;
    let mut errors = Vec::with_capacity(o.len());
    let mut table = Vec::with_capacity(o.len());
    for r in &o {
        let id = r.record.scenario_id;
        let Some(q) = s.iter().find(|q| q.record.scenario_id == id) else {
            bail!("scenario {id} missing from {}", simplified.display());
        };
        let err = (q.record.impact - r.record.impact).abs() / r.record.impact;
        errors.push(err);
        table.push(vec![
            id.to_string(),
            r.record.impact.to_string(),
            q.record.impact.to_string(),
            err.to_string(),
        ]);
    }
    out.write_csv(
        "reroute_error.csv",
        &["scenario_id", "oracle", "simplified", "rel_error"],
        table,
    )?;
    let n = errors.len().max(1) as f64;
    let cdf: Vec<Vec<String>> = ERROR_STEPS
        .iter()
        .map(|&t| {
            let within = errors.iter().filter(|&&e| e < t).count() as f64 / n;
            vec![t.to_string(), within.to_string()]
        })
        .collect();
    out.write_csv("reroute_error_cdf.csv", &["threshold", "fraction_within"], cdf)?;
    let within = errors.iter().filter(|&&e| e < 0.1).count() as f64 / n;
    println!("{} scenarios, {:.2}% within 10% of the oracle", errors.len(), 100.0 * within);
    Ok(())
}

fn count(v: &Value, key: &str, path: &Path) -> Result<usize> {
    match &v[key] {
        Value::Array(a) => Ok(a.len()),
        x => x
            .as_u64()
            .map(|n| n as usize)
            .with_context(|| format!("{}: missing `{key}`", path.display())),
    }
}

/// Pruned vs unpruned problem size from validate, upgrade and te summaries.
fn constraint_counts(out: &Output, plans: &[std::path::PathBuf]) -> Result<()> {
    let mut table = Vec::new();
    for path in plans {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let kind = v["kind"].as_str().unwrap_or_default().to_string();
        let (pruned, full) = match kind.as_str() {
            "te" => (count(&v, "congestion_rows", path)?, count(&v, "full_congestion_rows", path)?),
            "upgrade" => (count(&v, "constrained", path)?, count(&v, "total_scenarios", path)?),
            "validate" => (count(&v, "pruned_evaluations", path)?, count(&v, "full_evaluations", path)?),
            other => bail!("{}: unknown summary kind `{other}`", path.display()),
        };
        // no speedup figure when nothing had to be constrained
        let ratio = (pruned > 0).then(|| full as f64 / pruned as f64);
        match ratio {
            Some(r) => println!("{}: {kind} {pruned} of {full} ({r:.2}x)", path.display()),
            None => println!("{}: {kind} {pruned} of {full}", path.display()),
        }
        table.push(vec![
            path.display().to_string(),
            kind,
            pruned.to_string(),
            full.to_string(),
            ratio.map(|r| r.to_string()).unwrap_or_default(),
        ]);
    }
    out.write_csv(
        "constraint_counts.csv",
        &["file", "kind", "pruned", "full", "speedup"],
        table,
    )?;
    Ok(())
}
