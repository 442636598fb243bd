//! `psi6`: derive the six-photon state and regenerate its analyses as files.

mod commands;
mod config;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or names; exit 1.
    Usage(String),
    /// Inputs that fail validation (ranges, files, config); exit 2.
    Validation(String),
    /// A computed result failed its own consistency check; exit 3.
    Check(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Check(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Validation(m) => write!(f, "validation failed: {m}"),
            CliError::Check(m) => write!(f, "numerical check failed: {m}"),
        }
    }
}

impl From<psi6::Error> for CliError {
    fn from(e: psi6::Error) -> Self {
        match e {
            psi6::Error::Usage(m) => CliError::Usage(m),
            psi6::Error::Protocol(_) => CliError::Check(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
    Text,
}

impl std::str::FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        <Format as ValueEnum>::from_str(s, true).map_err(|_| CliError::Usage(format!("unknown format {s:?}")))
    }
}

#[derive(Debug, Parser)]
#[command(name = "psi6", version, about = "Six-photon entangled state: derivation, statistics and entanglement analysis")]
pub struct Cli {
    /// RNG seed for sampled outputs.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file (directory for `simulate`); stdout if omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// JSON run configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Push a PDC emission term through a beam-splitter network and post-select.
    Derive(DeriveArgs),
    /// Outcome probabilities of ρ(p) with identical analyzers on every qubit.
    Histogram(HistogramArgs),
    /// Condition Ψ6+ on one qubit's measurement outcome.
    Project(ProjectArgs),
    /// Correlations, fidelity, witnesses and indicator for ρ(p) or measured counts.
    Report(ReportArgs),
    /// Print a witness as Pauli terms.
    Witness(WitnessArgs),
    /// Run 1 → 3 telecloning over Ψ6+.
    Teleclone(TelecloneArgs),
    /// Sample count tables from ρ(p).
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct DeriveArgs {
    /// Number of emitted pairs.
    #[arg(long)]
    pub order: Option<u32>,
    /// experiment | four-mode | pair
    #[arg(long)]
    pub network: Option<String>,
    /// Pair-emission amplitude (real, |alpha| < 1).
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Relative phase between the two emission terms, radians.
    #[arg(long, allow_hyphen_values = true)]
    pub phase: Option<f64>,
    /// Also write the post-network Fock polynomial (before post-selection) as JSON.
    #[arg(long)]
    pub fock_dump: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SamplingArgs {
    /// Fixed number of events.
    #[arg(long, conflicts_with_all = ["duration", "rate"])]
    pub events: Option<u64>,
    /// Acquisition time in hours (Poisson event count).
    #[arg(long)]
    pub duration: Option<f64>,
    /// Sixfold rate per hour (Poisson event count).
    #[arg(long)]
    pub rate: Option<f64>,
}

#[derive(Debug, Args)]
pub struct HistogramArgs {
    /// HV | DA | LR
    #[arg(long)]
    pub basis: Option<String>,
    /// White-noise visibility.
    #[arg(long)]
    pub p: Option<f64>,
    /// analytic | sampled
    #[arg(long)]
    pub mode: Option<String>,
    /// Plot an existing count table instead of ρ(p).
    #[arg(long, conflicts_with_all = ["basis", "p", "mode"])]
    pub counts: Option<PathBuf>,
    #[command(flatten)]
    pub sampling: SamplingArgs,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    /// Measured qubit: mode letter a-f or index 0-5.
    #[arg(long)]
    pub qubit: Option<String>,
    /// H, V, D, A, L or R.
    #[arg(long)]
    pub outcome: Option<String>,
    /// Basis of the printed five-qubit distribution.
    #[arg(long)]
    pub basis: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Analytic report for ρ(p).
    #[arg(long, conflicts_with = "counts")]
    pub p: Option<f64>,
    /// Count tables measured in HV, DA and LR (any order).
    #[arg(long, num_args = 1..)]
    pub counts: Vec<PathBuf>,
    /// Significance multiplier on standard errors for verdicts.
    #[arg(long)]
    pub k: Option<f64>,
}

#[derive(Debug, Args)]
pub struct WitnessArgs {
    /// reduced | max-overlap
    #[arg(long)]
    pub witness: Option<String>,
    /// Overlap bound of the max-overlap witness.
    #[arg(long)]
    pub bound: Option<f64>,
    /// Identity coefficient of the reduced witness.
    #[arg(long)]
    pub identity_constant: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TelecloneArgs {
    /// Input qubit: H, V, D, A, L, R or bloch:x:y:z.
    #[arg(long, allow_hyphen_values = true)]
    pub input: Option<String>,
    /// Receiver qubits (1-6, comma separated).
    #[arg(long, value_delimiter = ',')]
    pub receivers: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub p: Option<f64>,
    /// Bases to sample (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub bases: Option<Vec<String>>,
    #[command(flatten)]
    pub sampling: SamplingArgs,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let format = match (cli.format, config.format.as_deref()) {
        (Some(f), _) => Some(f),
        (None, Some(s)) => Some(s.parse()?),
        (None, None) => None,
    };
    let ctx = commands::Context {
        seed: config::pick(cli.seed, config.seed).unwrap_or(7),
        out: config::pick(cli.out.clone(), config.out.clone()),
        format,
        config: &config,
    };
    match &cli.command {
        Command::Derive(a) => commands::derive(&ctx, a),
        Command::Histogram(a) => commands::histogram(&ctx, a),
        Command::Project(a) => commands::project(&ctx, a),
        Command::Report(a) => commands::report(&ctx, a),
        Command::Witness(a) => commands::witness(&ctx, a),
        Command::Teleclone(a) => commands::teleclone(&ctx, a),
        Command::Simulate(a) => commands::simulate(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("psi6: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
