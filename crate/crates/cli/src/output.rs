//! Human-readable summary on stdout and the JSON or CSV report.

use std::fs::File;
use std::io::{self, IsTerminal, Write};
use std::path::Path;

use anyhow::{Context, Result};
use rellich_core::harness::{write_csv, Check, Report};

use crate::args::{Format, Settings};
use crate::commands::Outcome;

fn use_color() -> bool {
    std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty()) && io::stdout().is_terminal()
}

fn status(passed: bool, color: bool) -> String {
    match (passed, color) {
        (true, true) => "\x1b[32mPASS\x1b[0m".into(),
        (false, true) => "\x1b[31mFAIL\x1b[0m".into(),
        (true, false) => "PASS".into(),
        (false, false) => "FAIL".into(),
    }
}

fn check_line(c: &Check, color: bool) -> String {
    let mut line = format!("  [{}] {}", status(c.passed, color), c.id);
    if let Some(v) = c.value {
        line.push_str(&format!(" value={v:.6e}"));
    }
    if let Some(t) = c.tolerance {
        line.push_str(&format!(" tol={t:e}"));
    }
    if !c.detail.is_empty() {
        line.push_str(&format!(" ({})", c.detail));
    }
    line
}

pub fn summary(report: &Report, settings: &Settings) -> String {
    let color = use_color();
    let p = &settings.params;
    let passed = report.checks.iter().filter(|c| c.passed).count();
    let mut out = format!(
        "{} n={} p={} q={} alpha={}: {} ({passed}/{} checks)\n",
        report.command,
        p.n,
        p.p,
        p.q,
        p.alpha,
        status(report.all_passed(), color),
        report.checks.len()
    );
    for c in &report.checks {
        out.push_str(&check_line(c, color));
        out.push('\n');
    }
    out
}

fn checks_csv<W: Write>(checks: &[Check], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "passed", "value", "tolerance", "detail"])?;
    for c in checks {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        w.write_record([
            c.id.clone(),
            c.passed.to_string(),
            opt(c.value),
            opt(c.tolerance),
            c.detail.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_body<W: Write>(outcome: &Outcome, settings: &Settings, mut out: W) -> Result<()> {
    match settings.format {
        Format::Json => {
            let mut report = outcome.report.clone();
            if !settings.comparable {
                report.stamp();
            }
            writeln!(out, "{}", report.to_json()?)?;
        }
        Format::Csv => match &outcome.rows {
            Some(rows) => write_csv(rows, out)?,
            None => checks_csv(&outcome.report.checks, out)?,
        },
    }
    Ok(())
}

/// Prints the summary and writes the report to `--out`, or the report alone to stdout for `--out -`.
pub fn emit(outcome: &Outcome, settings: &Settings) -> Result<()> {
    let stdout = io::stdout();
    match settings.out.as_deref() {
        Some(path) if path == Path::new("-") => write_body(outcome, settings, stdout.lock()),
        Some(path) => {
            print!("{}", summary(&outcome.report, settings));
            let file =
                File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_body(outcome, settings, io::BufWriter::new(file))
                .with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{}", summary(&outcome.report, settings));
            Ok(())
        }
    }
}
