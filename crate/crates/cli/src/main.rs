use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gfou_cli::campaign::{run_gate, run_hurst, run_pvariation, run_simulate, run_validate_cov};
use gfou_cli::{CliError, ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(name = "gfou", version, about = "Simulate and validate generalized fractional OU processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate replication paths and per-time summaries.
    Simulate(Common),
    /// Compare closed form, series, quadrature and Monte Carlo covariances.
    ValidateCov(Common),
    /// Estimate the Hurst index from simulated increments.
    Hurst(Common),
    /// Locate the p-variation transition under grid refinement.
    Pvariation(Common),
    /// Print existence and stationarity gate verdicts without simulating.
    Gate(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    /// Output directory (default: config `out_dir`, then $GFOU_OUT_DIR, then ./gfou-out).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Relative tolerance for closed form vs quadrature.
    #[arg(long)]
    tolerance: Option<f64>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        cfg.apply(&Overrides {
            seed: self.seed,
            reps: self.reps,
            out: self.out.clone(),
            jobs: self.jobs,
            tolerance: self.tolerance,
        })?;
        Ok(cfg)
    }
}

fn print_json<T: serde::Serialize>(v: &T) {
    // a closed pipe (e.g. `| head`) is not an error worth a panic
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(c) => {
            let s = run_simulate(&c.load()?)?;
            for w in &s.warnings {
                eprintln!("warning: {w}");
            }
            print_json(&s);
        }
        Command::ValidateCov(c) => print_json(&run_validate_cov(&c.load()?)?),
        Command::Hurst(c) => {
            let s = run_hurst(&c.load()?)?;
            print_json(&serde_json::json!({ "aggregate": s.aggregate, "files": s.files }));
        }
        Command::Pvariation(c) => print_json(&run_pvariation(&c.load()?)?),
        Command::Gate(c) => {
            let r = run_gate(&c.load()?)?;
            print_json(&r);
            if !r.existence.ok {
                return Err(CliError::ExistenceGate(r.existence));
            }
            if r.stationarity_ok == Some(false) {
                return Err(CliError::StationarityGate(r.stationarity_reason.unwrap_or_default()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
