use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fock_interfere::scenario::{self, OutputFormat, Overrides, RunError, ScenarioConfig};

#[derive(Parser)]
#[command(name = "fock-interfere", version, about = "Exact simulation of many-particle interference and Hubbard dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a TOML config.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
        /// Sampling seed (overrides `sampling.seed`).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Time the permanent engine.
    Bench {
        #[command(subcommand)]
        target: BenchTarget,
    },
    /// Print the registered scenarios.
    ListScenarios,
}

#[derive(Subcommand)]
enum BenchTarget {
    Permanent {
        #[arg(long, default_value_t = 24)]
        max_n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the report as CSV into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<(), RunError> {
    match command {
        Command::Run { config, out, format, seed } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            cfg.apply(&Overrides { out, format, seed });
            for path in scenario::run_and_write(&cfg)? {
                println!("{}", path.display());
            }
        }
        Command::Bench { target: BenchTarget::Permanent { max_n, seed, out } } => {
            let rows = scenario::bench_permanent(max_n, seed)?;
            let table = scenario::bench_table(&rows);
            print!("{}", table.to_csv());
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(|e| RunError::Io(format!("{}: {e}", dir.display())))?;
                let path = dir.join("bench_permanent.csv");
                std::fs::write(&path, table.to_csv()).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
                eprintln!("wrote {}", path.display());
            }
        }
        Command::ListScenarios => print!("{}", scenario::list_scenarios()),
    }
    Ok(())
}
