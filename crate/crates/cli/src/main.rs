use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "osp-lab", version, about = "Online saddle-point experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Also write an SVG chart per seed.
        #[arg(long)]
        svg: bool,
    },
    /// Run every brute-force oracle.
    OracleCheck,
    ListScenarios,
    ListAlgorithms,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, svg } => osp_lab_cli::cmd_run(&config, svg),
        Command::OracleCheck => osp_lab_cli::cmd_oracle_check(),
        Command::ListScenarios => {
            print!("{}", osp_lab_cli::scenario_listing());
            0
        }
        Command::ListAlgorithms => {
            print!("{}", osp_lab_cli::algorithm_listing());
            0
        }
    };
    ExitCode::from(code as u8)
}
