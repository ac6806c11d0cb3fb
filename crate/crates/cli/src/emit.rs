//! JSON and CSV report emission.

use std::io::Write;

use serde::Serialize;

use geotomo::VerifierReport;

use crate::suite::SuiteConfig;
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Serialize)]
struct Envelope<'a> {
    schema_version: u32,
    suite: &'a str,
    config: &'a SuiteConfig,
    reports: &'a [VerifierReport],
}

pub const CSV_HEADER: &[&str] = &[
    "theorem",
    "bodies",
    "alpha",
    "epsilon",
    "lhs",
    "rhs",
    "constant",
    "margin",
    "pass",
    "hypothesis_met",
    "flags",
    "tolerance",
    "resolution",
    "lmax",
    "error",
    "schema_version",
];

/// Decimal with 12 significant digits; empty for missing values.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.11e}")
    }
}

pub fn to_json(cfg: &SuiteConfig, reports: &[VerifierReport]) -> Result<String, CliError> {
    if reports.is_empty() {
        return Err(CliError::Config("no reports to emit".into()));
    }
    let env = Envelope {
        schema_version: SCHEMA_VERSION,
        suite: cfg.suite.name(),
        config: cfg,
        reports,
    };
    let mut s = serde_json::to_string_pretty(&env).map_err(|e| CliError::Output(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn to_csv(reports: &[VerifierReport]) -> Result<String, CliError> {
    if reports.is_empty() {
        return Err(CliError::Config("no reports to emit".into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let out = |e: csv::Error| CliError::Output(e.to_string());
    w.write_record(CSV_HEADER).map_err(out)?;
    for r in reports {
        let bodies: Vec<&str> = r.bodies.iter().map(|b| b.label.as_str()).collect();
        w.write_record([
            r.theorem.clone(),
            bodies.join(";"),
            r.alpha.map(format_number).unwrap_or_default(),
            format_number(r.epsilon),
            format_number(r.lhs),
            format_number(r.rhs),
            format_number(r.constant),
            format_number(r.margin),
            r.pass.to_string(),
            r.hypothesis_met.to_string(),
            r.flags.join(";"),
            format_number(r.tolerance),
            r.resolution.to_string(),
            r.lmax.to_string(),
            r.error.clone().unwrap_or_default(),
            SCHEMA_VERSION.to_string(),
        ])
        .map_err(out)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
}

pub fn render(cfg: &SuiteConfig, reports: &[VerifierReport], format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => to_json(cfg, reports),
        Format::Csv => to_csv(reports),
    }
}

/// Writes the rendered reports to `path`, or to stdout when `path` is `None`.
pub fn emit_report(
    cfg: &SuiteConfig,
    reports: &[VerifierReport],
    format: Format,
    path: Option<&std::path::Path>,
) -> Result<(), CliError> {
    let text = render(cfg, reports, format)?;
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Output(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Output(e.to_string())),
    }
}
