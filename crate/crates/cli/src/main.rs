use std::path::PathBuf;
use std::process::ExitCode;

use cerg_cli::commands::{self, RunArgs};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cerg", version, about = "Compliant explicit reference governor simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write its trace, summary and plots
    Run {
        /// Scenario file
        file: PathBuf,
        /// Apply the target reference directly (ungoverned baseline)
        #[arg(long)]
        no_governor: bool,
        /// Output directory (defaults to [output] dir, then $CERG_OUT_DIR, then ./cerg-out)
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// Write SVG plots
        #[arg(long)]
        plots: bool,
    },
    /// Run governed and baseline simulations side by side
    Compare {
        /// Scenario file
        file: PathBuf,
        /// Output directory
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Parse and check a scenario without simulating
    Validate {
        /// Scenario file
        file: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { file, no_governor, out, plots } => {
            commands::exit_code(&commands::run(&RunArgs { path: file, no_governor, out, plots }))
        }
        Command::Compare { file, out } => commands::exit_code(&commands::compare(&file, out.as_deref())),
        Command::Validate { file } => commands::exit_code(&commands::validate(&file)),
    };
    ExitCode::from(code)
}
