//! Experiment runner for the `dequant` library: reads a TOML config, runs one
//! command and writes a CSV result file with a JSON summary next to it.

pub mod commands;
pub mod config;
pub mod error;
pub mod functional_file;
pub mod report;

use std::path::Path;

pub use config::{Command, ExperimentConfig, FileConfig, Overrides};
pub use error::{CliError, CliResult};
pub use report::{parse_csv, Report, ResultRow};

/// Resolves the config at `path`, runs it and returns the report without writing.
pub fn evaluate(path: &Path, overrides: &Overrides) -> CliResult<(ExperimentConfig, Report)> {
    let file = config::load_file(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let cfg = ExperimentConfig::resolve(file, overrides, base)?;
    let outcome = commands::execute(&cfg)?;
    let report = Report {
        header: cfg.header(),
        rows: outcome.rows,
        summary: outcome.summary,
    };
    report.check_finite()?;
    Ok((cfg, report))
}

/// Runs the config and writes `out` (CSV) and its `.json` sibling atomically.
pub fn run(path: &Path, overrides: &Overrides) -> CliResult<Report> {
    let (cfg, report) = evaluate(path, overrides)?;
    report::write_atomic(&cfg.out, &report.to_csv())?;
    report::write_atomic(&report::json_path(&cfg.out), &report.to_json())?;
    Ok(report)
}
