//! Experiment runner behind the `wcontract` binary.
//!
//! A run reads a strict TOML config, executes one experiment and writes
//! `report.json` plus one CSV per table into the output directory. The
//! `WCONTRACT_OUTPUT_DIR` environment variable overrides `output_dir`.

pub mod catalog;
pub mod config;
pub mod experiments;

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::{ConfigError, ExperimentConfig};
use crate::experiments::{Claim, Outcome, Status};

pub const OUTPUT_DIR_ENV: &str = "WCONTRACT_OUTPUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_WITHHELD: i32 = 2;

#[derive(Debug, Serialize)]
pub struct Report {
    pub experiment: String,
    pub seed: u64,
    pub config: Value,
    /// certified, withheld, completed or error.
    pub status: String,
    pub exit_code: i32,
    pub claims: Vec<Claim>,
    pub details: Value,
    /// Files written next to the report, in write order.
    pub files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug)]
pub struct RunSummary {
    pub exit_code: i32,
    pub output_dir: PathBuf,
    pub report: Report,
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError { field: String::new(), message: format!("cannot read {}: {e}", path.display()) })?;
    config::parse(&text)
}

pub fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => cfg.output_dir.clone(),
    }
}

fn exit_code(status: Status) -> i32 {
    match status {
        Status::Certified | Status::Completed => EXIT_OK,
        Status::Withheld => EXIT_WITHHELD,
    }
}

fn status_name(status: Status) -> &'static str {
    match status {
        Status::Certified => "certified",
        Status::Withheld => "withheld",
        Status::Completed => "completed",
    }
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>().map(|s| s.to_string()).or_else(|| p.downcast_ref::<String>().cloned()).unwrap_or_else(|| "panic".into())
}

/// Runs a validated config and writes its outputs into `dir`.
pub fn run_config(cfg: &ExperimentConfig, dir: &Path) -> std::io::Result<RunSummary> {
    fs::create_dir_all(dir)?;
    let result = panic::catch_unwind(AssertUnwindSafe(|| experiments::run(cfg)));
    let outcome: Result<Outcome, String> = match result {
        Ok(Ok(o)) => Ok(o),
        Ok(Err(e)) => Err(e.to_string()),
        Err(p) => Err(format!("internal error: {}", panic_message(p))),
    };
    let mut report = Report {
        experiment: cfg.experiment.name().into(),
        seed: cfg.seed,
        config: serde_json::to_value(cfg).unwrap_or(Value::Null),
        status: "error".into(),
        exit_code: EXIT_ERROR,
        claims: Vec::new(),
        details: Value::Null,
        files: Vec::new(),
        error: None,
    };
    match outcome {
        Ok(o) => {
            for (stem, table) in &o.tables {
                let name = format!("{stem}.csv");
                match table.write_path(&dir.join(&name)) {
                    Ok(()) => report.files.push(name),
                    Err(e) => report.error = Some(format!("writing {name}: {e}")),
                }
            }
            report.claims = o.claims;
            report.details = o.details;
            if report.error.is_none() {
                report.status = status_name(o.status).into();
                report.exit_code = exit_code(o.status);
            }
        }
        Err(e) => report.error = Some(e),
    }
    report.files.push("report.json".into());
    let mut text = serde_json::to_string_pretty(&report).map_err(std::io::Error::other)?;
    text.push('\n');
    fs::write(dir.join("report.json"), text)?;
    Ok(RunSummary { exit_code: report.exit_code, output_dir: dir.to_path_buf(), report })
}
