//! `richsweep`: phase portraits, single runs, spectra, comparisons and reports.
//!
//! Exit codes: 0 on success, 2 on an invalid spec or arguments, 3 when some
//! sweep cells or runs failed, 1 on any other error.

mod commands;
mod run;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

const OUT_ENV: &str = "RICHSWEEP_OUT";

#[derive(Parser)]
#[command(name = "richsweep", version, about = "Feature-learning strength sweeps and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Phase portrait of a toy model over (gamma, eta).
    ToyPhase(Common),
    /// Phase portrait of an MLP over (gamma, eta).
    NetPhase(Common),
    /// One training run with optional sharpness, alignment and movement tracking.
    TrainOne(Common),
    /// Sharpness over time and across gamma for a list of (gamma, eta) runs.
    Spectra(Common),
    /// Function agreement and kernel alignment across finished runs.
    Compare(Common),
    /// Re-render figures from finished runs and portraits.
    Report(Common),
}

#[derive(Args)]
struct Common {
    /// JSON spec for the command.
    #[arg(long)]
    spec: PathBuf,
    /// Output directory; RICHSWEEP_OUT takes precedence when set.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps and multi-run commands.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Reuse finished cells or runs found in the output directory.
    #[arg(long)]
    resume: bool,
    /// Overrides the seed given in the spec.
    #[arg(long)]
    seed: Option<u64>,
}

/// Resolved command-line settings shared by every command.
pub struct Settings {
    pub out: PathBuf,
    pub jobs: usize,
    pub resume: bool,
    pub seed: Option<u64>,
}

#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Partial(String),
    Runtime(String),
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Invalid(m) => write!(f, "invalid spec: {m}"),
            Failure::Partial(m) => write!(f, "partial failure: {m}"),
            Failure::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl From<richsweep::Error> for Failure {
    fn from(e: richsweep::Error) -> Self {
        match e {
            richsweep::Error::Config(_) | richsweep::Error::Validation(_) => Failure::Invalid(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn settings(c: &Common) -> Result<Settings, Failure> {
    let out = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from).or_else(|| c.out.clone());
    let Some(out) = out else {
        return Err(Failure::Invalid(format!("--out: required unless {OUT_ENV} is set")));
    };
    if c.jobs == 0 {
        return Err(Failure::Invalid("--jobs: must be at least 1".into()));
    }
    std::fs::create_dir_all(&out)?;
    Ok(Settings { out, jobs: c.jobs, resume: c.resume, seed: c.seed })
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::ToyPhase(c) => {
            let spec = spec::load(&c.spec)?;
            commands::toy_phase(spec, &settings(&c)?)
        }
        Command::NetPhase(c) => {
            let spec = spec::load(&c.spec)?;
            commands::net_phase(spec, &settings(&c)?)
        }
        Command::TrainOne(c) => {
            let spec = spec::load(&c.spec)?;
            commands::train_one(spec, &settings(&c)?)
        }
        Command::Spectra(c) => {
            let spec = spec::load(&c.spec)?;
            commands::spectra(spec, &settings(&c)?)
        }
        Command::Compare(c) => {
            let spec = spec::load(&c.spec)?;
            commands::compare(spec, &settings(&c)?)
        }
        Command::Report(c) => {
            let spec = spec::load(&c.spec)?;
            commands::report(spec, &settings(&c)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Failure::Invalid(_) => 2,
                Failure::Partial(_) => 3,
                Failure::Runtime(_) => 1,
            })
        }
    }
}
