//! Batch front end: simulate | slip | convergence | validate.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation or guard failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use nonholo::cli::{self, SlipOverrides};

#[derive(Parser)]
#[command(name = "nonholo", version, about = "Constrained-mechanics batch tool")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Seed for random-state invariant sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for sweep workloads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the configured model and write a trajectory CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate slip approximations at one state (CSV row).
    Slip {
        #[command(flatten)]
        common: Common,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        x: Option<f64>,
        #[arg(long)]
        y: Option<f64>,
        #[arg(long)]
        phi: Option<f64>,
        #[arg(long)]
        v_theta: Option<f64>,
        #[arg(long)]
        v_phi: Option<f64>,
    },
    /// Epsilon-sweep trajectory convergence study.
    Convergence {
        #[command(flatten)]
        common: Common,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the invariant suites against the configured system.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };

    let result = match cli.command {
        Command::Simulate { common, out } => cli::cmd_simulate(&common.config, &out),
        Command::Slip {
            common,
            out,
            theta,
            x,
            y,
            phi,
            v_theta,
            v_phi,
        } => cli::cmd_slip(
            &common.config,
            out.as_deref(),
            SlipOverrides {
                theta,
                x,
                y,
                phi,
                v_theta,
                v_phi,
            },
        ),
        Command::Convergence { common, out } => {
            cli::cmd_convergence(&common.config, &out, common.jobs)
        }
        Command::Validate { common } => cli::cmd_validate(&common.config, common.seed),
    };

    match result {
        Ok(report) => {
            print!("{report}");
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
