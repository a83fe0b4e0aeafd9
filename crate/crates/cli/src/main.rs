use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;

/// Solvers, exact solutions and an axiom verifier for flux-limited junctions.
#[derive(Debug, Parser)]
#[command(name = "junction", version)]
struct Cli {
    /// Scenario file (JSON). Defaults apply when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, env = "JUNCTION_OUT_DIR", default_value = "out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Hj,
    Cl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum HjRoute {
    /// Monotone node scheme.
    Direct,
    /// Primitive of the conservation-law run.
    Cl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExactDatum {
    #[value(name = "phi0_hat")]
    Phi0Hat,
    #[value(name = "phiA_hat")]
    PhiAHat,
    #[value(name = "phiA_check")]
    PhiACheck,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact junction Riemann solution sampled in xi = x / t.
    Riemann {
        #[arg(long, allow_hyphen_values = true)]
        left: f64,
        #[arg(long, allow_hyphen_values = true)]
        right: f64,
        /// Overrides the scenario limiter.
        #[arg(long)]
        limiter: Option<f64>,
        #[arg(long, default_value_t = 401)]
        samples: usize,
    },
    /// Conservation-law run of the scenario datum.
    SolveCl,
    /// HJ run of the scenario datum.
    SolveHj {
        #[arg(long, value_enum, default_value_t = HjRoute::Direct)]
        method: HjRoute,
    },
    /// Closed-form HJ solution on the scenario grid.
    ExactHj {
        #[arg(long, value_enum)]
        datum: ExactDatum,
        #[arg(long)]
        limiter: Option<f64>,
        #[arg(long)]
        time: f64,
        /// Level of the phiA data; the limiter when absent.
        #[arg(long)]
        level: Option<f64>,
    },
    /// Prints the limiter realized by a semi-group.
    IdentifyLimiter {
        #[arg(long, value_enum, default_value_t = Method::Hj)]
        method: Method,
        /// External semi-group command, split on whitespace.
        #[arg(long)]
        external: Option<String>,
    },
    /// Runs the axiom battery and writes a text and a JSON report.
    Verify {
        /// External conservation-law command, split on whitespace.
        #[arg(long)]
        external_cl: Option<String>,
        /// External HJ command, split on whitespace.
        #[arg(long)]
        external_hj: Option<String>,
        /// Comma-separated subset of checks.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
    },
    /// Evolves a state file with the internal solvers (external semi-group protocol).
    #[command(hide = true)]
    Evolve {
        #[arg(long, value_enum)]
        equation: Method,
        state: PathBuf,
        time: f64,
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
