//! `tailquant` command-line driver.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 insufficient data.

mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};


#[derive(Debug, Parser)]
#[command(name = "tailquant", version, about = "Bayesian estimation of extreme low quantiles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate a low quantile from a data file, optionally fused with a normal prior.
    Estimate(EstimateArgs),
    /// Print the analytic bootstrap weights of the order statistic at rank floor(n p).
    Weights(WeightsArgs),
    /// Run the Monte Carlo RMSE study and write a CSV table.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Newline-separated observations; lines starting with `#` are ignored.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long = "p-value")]
    pub p_value: f64,
    #[arg(long = "prior-mean", allow_hyphen_values = true)]
    pub prior_mean: Option<f64>,
    #[arg(long = "prior-var")]
    pub prior_var: Option<f64>,
    /// How the sample-quantile variance is estimated.
    #[arg(long = "variance-mode", value_enum, default_value_t = VarianceMode::Bootstrap)]
    pub variance_mode: VarianceMode,
    /// Known sample-quantile variance; takes precedence over the bootstrap in the posterior.
    #[arg(long = "sample-var")]
    pub sample_var: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum VarianceMode {
    Bootstrap,
    None,
}

#[derive(Debug, Args)]
pub struct WeightsArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long = "p-value")]
    pub p_value: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Key-value configuration file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated p-values.
    #[arg(long = "p-value", alias = "p")]
    pub p_values: Option<String>,
    #[arg(long = "prior-mean", allow_hyphen_values = true)]
    pub prior_mean: Option<String>,
    /// Comma-separated prior variances.
    #[arg(long = "prior-var", alias = "sigma2")]
    pub prior_vars: Option<String>,
    /// Comma-separated sample sizes, or `auto` for the log-spaced default.
    #[arg(long = "sample-sizes", alias = "n")]
    pub sample_sizes: Option<String>,
    #[arg(long)]
    pub trials: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Comma-separated subset of sample, bayes_known, bayes_bootstrap.
    #[arg(long)]
    pub methods: Option<String>,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; output does not depend on this.
    #[arg(long)]
    pub threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut stdout = std::io::stdout().lock();
    let mut stderr = std::io::stderr().lock();
    let result = match cli.command {
        Command::Estimate(args) => commands::estimate(&args, &mut stdout),
        Command::Weights(args) => commands::weights(&args, &mut stdout),
        Command::Simulate(args) => commands::simulate(&args, &mut stdout, &mut stderr),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
