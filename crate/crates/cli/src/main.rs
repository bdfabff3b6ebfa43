//! `magtorus`: run scenario checks, simulations and assemblies.
//!
//! Exit status: 0 when every requested check passes, 1 when a check fails or
//! an integration aborts, 2 on invalid input.

mod commands;
mod output;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] magtorus::Error),
}

#[derive(Debug, Parser)]
#[command(name = "magtorus", version, about = "Checks and simulations for magnetic geodesic flows on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the residual and certificate checks of a scenario.
    Verify {
        scenario: PathBuf,
        #[command(flatten)]
        common: CommonFlags,
        /// Include wall-clock timings in the report.
        #[arg(long)]
        timings: bool,
    },
    /// Integrate the trajectories of a scenario and write one CSV each.
    Simulate {
        scenario: PathBuf,
        #[command(flatten)]
        common: CommonFlags,
        #[command(flatten)]
        step: StepFlags,
    },
    /// Assemble the quasi-linear system at a state and classify its spectrum.
    Assemble {
        /// Scenario giving the degree, and `at` or the fields for `--sweep`.
        scenario: Option<PathBuf>,
        /// State `Λ,u_0..u_{N-1},v_1..v_{N-1}`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Option<Vec<f64>>,
        /// Degree when no scenario is given.
        #[arg(long)]
        degree: Option<usize>,
        /// Geodesic matrix instead: `--geodesic n=2 a=0,1,1`.
        #[arg(long, num_args = 2, value_names = ["n=N", "a=A0,..,AN"], conflicts_with_all = ["at", "degree", "sweep"])]
        geodesic: Option<Vec<String>>,
        /// Classify the spectrum at every grid node of the scenario ansatz.
        #[arg(long)]
        sweep: bool,
        /// Relative distinctness tolerance for eigenvalues.
        #[arg(long)]
        distinct_tol: Option<f64>,
        #[command(flatten)]
        common: CommonFlags,
    },
}

#[derive(Debug, Clone, Args)]
struct CommonFlags {
    /// Sampling grid `NX,NY`.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    grid: Option<Vec<usize>>,
    /// Tolerance: residual sup-norm for `verify`, relative drift for `simulate`.
    #[arg(long)]
    tol: Option<f64>,
    /// Directory for the report and data files (default: report on stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write whitespace-separated column files for plotting.
    #[arg(long)]
    plot_data: bool,
    /// Seed for random field specs.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
#[group(multiple = false)]
struct StepFlags {
    /// Fixed RK4 step for every trajectory.
    #[arg(long)]
    dt: Option<f64>,
    /// Step-doubling control with this absolute tolerance.
    #[arg(long)]
    adaptive: Option<f64>,
}

impl CommonFlags {
    fn grid(&self) -> Result<Option<[usize; 2]>, CliError> {
        match self.grid.as_deref() {
            None => Ok(None),
            Some([nx, ny]) => Ok(Some([*nx, *ny])),
            Some(other) => Err(CliError::Input(format!("--grid takes NX,NY, got {} values", other.len()))),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify {
            scenario,
            common,
            timings,
        } => commands::verify(&scenario, &common, timings),
        Command::Simulate {
            scenario,
            common,
            step,
        } => commands::simulate(&scenario, &common, &step),
        Command::Assemble {
            scenario,
            at,
            degree,
            geodesic,
            sweep,
            distinct_tol,
            common,
        } => commands::assemble(commands::AssembleArgs {
            scenario,
            at,
            degree,
            geodesic,
            sweep,
            distinct_tol,
            common,
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("magtorus: {e}");
            ExitCode::from(2)
        }
    }
}
