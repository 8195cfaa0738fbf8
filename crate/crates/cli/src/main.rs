//! `scalereg` — multi-scale time-series regression from the command line.
//!
//! Exit codes: 0 success, 2 input/validation error, 3 numerical
//! degeneracy, 4 internal error.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use scalereg_core::Error;
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "scalereg",
    version,
    about = "Scale-dependent regression and correlation for time series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-scale detrended variance and log-log slope for each column
    Dfa(AnalysisArgs),
    /// Classical OLS plus scale-dependent regression of y on x1 and x2
    Regress(AnalysisArgs),
    /// t curves, Monte Carlo critical values, partial coefficients, flags
    Significance(AnalysisArgs),
    /// Generate synthetic datasets to CSV
    Synth(SynthArgs),
    /// Classical partial correlations with t tests for every pair
    Partial(AnalysisArgs),
}

#[derive(Args, Serialize)]
pub struct AnalysisArgs {
    /// Input CSV file with a header row
    #[arg(long)]
    pub input: PathBuf,

    /// Response column
    #[arg(long = "y-col")]
    pub y_col: Option<String>,

    /// First regressor column
    #[arg(long = "x1-col")]
    pub x1_col: Option<String>,

    /// Second regressor column
    #[arg(long = "x2-col")]
    pub x2_col: Option<String>,

    /// Timestamp column (required for seasonal restriction)
    #[arg(long = "timestamp-col")]
    pub timestamp_col: Option<String>,

    /// Logarithmic scale grid as MIN:MAX:COUNT (default: derived from N)
    #[arg(long)]
    pub scales: Option<String>,

    /// Detrending polynomial order
    #[arg(long, default_value_t = 2)]
    pub order: usize,

    /// Significance level
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,

    /// Monte Carlo replications
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,

    /// RNG seed (falls back to SCALEREG_SEED, then 0)
    #[arg(long)]
    pub seed: Option<u64>,

    /// Restrict rows to one meteorological season
    #[arg(long, default_value = "all", value_parser = ["winter", "spring", "summer", "fall", "all"])]
    pub season: String,

    /// Output table format
    #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
    pub format: String,

    /// Directory for result files
    #[arg(long = "out-dir", default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Args, Serialize)]
pub struct SynthArgs {
    /// Generator family
    #[arg(long, value_parser = ["arfima", "bmfs", "regression"])]
    pub kind: String,

    /// Memory parameter in (-0.5, 0.5)
    #[arg(long, default_value_t = 0.4)]
    pub d: f64,

    /// Memory parameter of the error series (regression kind); white
    /// noise when omitted
    #[arg(long = "d-eps")]
    pub d_eps: Option<f64>,

    /// Series length (arfima and regression kinds)
    #[arg(long, default_value_t = 8192)]
    pub length: usize,

    /// Cascade multiplier in (0, 0.5) (bmfs kind)
    #[arg(long, default_value_t = 0.3)]
    pub p: f64,

    /// Cascade depth; series length is 2^depth (bmfs kind)
    #[arg(long, default_value_t = 15)]
    pub depth: usize,

    /// Contamination threshold (bmfs kind); off when omitted
    #[arg(long)]
    pub threshold: Option<f64>,

    /// Contamination noise standard deviation (bmfs kind)
    #[arg(long = "noise-sd")]
    pub noise_sd: Option<f64>,

    /// Intercept and slopes as B0,B1,B2 (regression kind)
    #[arg(long, default_value = "1,1,2")]
    pub betas: String,

    /// RNG seed (falls back to SCALEREG_SEED, then 0)
    #[arg(long)]
    pub seed: Option<u64>,

    /// Directory for generated files
    #[arg(long = "out-dir", default_value = ".")]
    pub out_dir: PathBuf,
}

fn exit_code(error: &Error) -> u8 {
    match error {
        Error::Collinear
        | Error::DegenerateAtScale { .. }
        | Error::SingularAtScale { .. }
        | Error::AllScalesDegenerate
        | Error::DegenerateFit { .. }
        | Error::TooManyFailedReps { .. } => 3,
        Error::GridMismatch => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Dfa(args) => commands::cmd_dfa(args),
        Command::Regress(args) => commands::cmd_regress(args),
        Command::Significance(args) => commands::cmd_significance(args),
        Command::Synth(args) => commands::cmd_synth(args),
        Command::Partial(args) => commands::cmd_partial(args),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(exit_code(&error))
        }
    }
}
