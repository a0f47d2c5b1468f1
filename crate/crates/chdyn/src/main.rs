use std::path::PathBuf;
use std::process::ExitCode;

use chdyn::{app, verify, AppError};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "chdyn", version, about = "Inertial Cahn-Hilliard / Maxwell-Cattaneo slab simulator")]
struct Cli {
    /// Output directory; overrides `output.dir` from the config.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the integrator and write diagnostics.csv plus snapshots.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Continue from a trajectory snapshot instead of the scenario.
        #[arg(long)]
        restart: Option<PathBuf>,
    },
    /// Solve the stationary problem and write equilibrium.chc.
    Steady {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed_snapshot: Option<PathBuf>,
    },
    /// Fit algebraic and exponential decay to the x_norm column.
    FitDecay {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        equilibrium: PathBuf,
        #[arg(long)]
        window_start: Option<f64>,
        #[arg(long)]
        floor: Option<f64>,
        #[arg(long, default_value_t = 0.95)]
        min_r2: f64,
    },
    /// Check the invariants of a diagnostics.csv.
    Verify {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value_t = verify::LYAPUNOV_SLACK)]
        lyapunov_slack: f64,
    },
}

fn run(cli: Cli) -> Result<bool, AppError> {
    let out = cli.output.as_deref();
    match cli.cmd {
        Cmd::Simulate { config, restart } => println!("{}", app::simulate(&config, out, restart.as_deref())?),
        Cmd::Steady { config, seed_snapshot } => println!("{}", app::steady_cmd(&config, out, seed_snapshot.as_deref())?),
        Cmd::FitDecay { csv, equilibrium, window_start, floor, min_r2 } => {
            println!("{}", app::fit_decay_cmd(&csv, &equilibrium, window_start, floor, min_r2)?)
        }
        Cmd::Verify { csv, lyapunov_slack } => {
            let (text, ok) = app::verify_cmd(&csv, lyapunov_slack)?;
            println!("{text}");
            return Ok(ok);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
