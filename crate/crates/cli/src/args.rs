use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "oedkit", version, about = "Model-based optimal experimental design")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the model outputs at one design.
    Simulate(Overrides),
    /// Fit parameters to a data table and report covariance.
    Estimate(Overrides),
    /// Search the design space for the criterion-optimal experiment.
    Design(Overrides),
    /// Tabulate every criterion over a 1-D design grid.
    Scan(Overrides),
    /// Check analytic criterion derivatives against finite differences.
    Verify(Overrides),
}

impl Command {
    pub fn overrides(&self) -> &Overrides {
        match self {
            Command::Simulate(o)
            | Command::Estimate(o)
            | Command::Design(o)
            | Command::Scan(o)
            | Command::Verify(o) => o,
        }
    }
}

/// Flags shared by every subcommand; each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// bod | tclab | membrane
    #[arg(long)]
    pub model: Option<String>,
    /// A | D | E | ME | pseudoA
    #[arg(long)]
    pub criterion: Option<String>,
    /// Prior parameter covariance (CSV, header of parameter names).
    #[arg(long, conflicts_with = "prior_fim")]
    pub prior_cov: Option<PathBuf>,
    /// Prior Fisher information (CSV, header of parameter names).
    #[arg(long)]
    pub prior_fim: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Multistart count.
    #[arg(long)]
    pub starts: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Scan grid as lo:hi:step.
    #[arg(long)]
    pub grid: Option<String>,
    /// Design values, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<String>,
    /// Parameter values, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
    /// Parameter values from a theta_hat.csv written by `estimate`.
    #[arg(long, conflicts_with = "theta")]
    pub theta_file: Option<PathBuf>,
    /// Measurement table: phi_1..phi_Nd, y_1..y_Nmeas per row.
    #[arg(long)]
    pub data: Option<PathBuf>,
}
