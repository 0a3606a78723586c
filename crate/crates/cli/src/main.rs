use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use dequant_cli::{CliError, Overrides};

/// Environment variable holding the worker thread count.
const THREADS_ENV: &str = "DEQUANT_THREADS";

/// Runs a dequantization experiment and writes CSV + JSON results.
#[derive(Debug, Parser)]
#[command(name = "dequant", version)]
struct Args {
    /// TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Result CSV path; the JSON summary goes next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo sample budget.
    #[arg(long)]
    samples: Option<usize>,
    /// Strictly decreasing list, e.g. `0.1,0.01,0.001`.
    #[arg(long, value_delimiter = ',')]
    alpha_grid: Option<Vec<f64>>,
    /// Dimension (grid points for `fieldgrid`).
    #[arg(long)]
    dim: Option<usize>,
    /// Record wall-clock times; output is then no longer byte-reproducible.
    #[arg(long)]
    timing: bool,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::config(format!(
            "{THREADS_ENV} must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config(e.to_string()))
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::new("USAGE", e.to_string().lines().next().unwrap_or_default());
            eprintln!("{}", err.line());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    let overrides = Overrides {
        out: args.out,
        seed: args.seed,
        samples: args.samples,
        alpha_grid: args.alpha_grid,
        dim: args.dim,
        timing: args.timing,
    };
    match init_threads().and_then(|()| dequant_cli::run(&args.config, &overrides)) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
