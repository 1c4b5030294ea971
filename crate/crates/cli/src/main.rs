use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lightcone::Execution;
use lightcone_cli::constants::{compute_constants, constants_csv, constants_table};
use lightcone_cli::run::{run_experiment, summary_csv, summary_table, RunOptions};
use lightcone_cli::spec::Experiment;
use lightcone_cli::{exit, Failure};

#[derive(Parser)]
#[command(name = "lightcone", version, about = "Certify light-cone bounds for lattice Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format of the printed table.
    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    format: Format,
    /// Worker threads (defaults to all cores).
    #[arg(long, env = "LIGHTCONE_THREADS", global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every certificate of an experiment and write its reports.
    Run {
        spec: PathBuf,
        /// Overrides the spec's output directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Overrides the spec's seed.
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Print the velocity constants of the experiment's dispersion.
    Constants { spec: PathBuf },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

fn json<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Failure { code: exit::INVALID_SPEC, message: e.to_string() })
}

fn execute(cli: Cli) -> Result<i32, Failure> {
    let execution = match cli.threads {
        Some(0) => return Err(Failure { code: exit::INVALID_SPEC, message: "--threads must be positive".into() }),
        Some(1) => Execution::Sequential,
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Failure { code: exit::RESOURCE, message: format!("cannot start {n} threads: {e}") })?;
            Execution::Parallel
        }
        None => Execution::default(),
    };
    match cli.command {
        Command::Run { spec, out_dir, seed_override } => {
            let exp = Experiment::load(&spec)?;
            let outcome = run_experiment(&exp, &RunOptions { out_dir, seed_override, execution })?;
            let text = match cli.format {
                Format::Table => summary_table(&outcome.summary),
                Format::Json => json(&outcome.summary)?,
                Format::Csv => summary_csv(&outcome.summary),
            };
            print!("{text}");
            if cli.format == Format::Table {
                println!("reports written to {}", outcome.out_dir.display());
            }
            Ok(if outcome.passed() { exit::PASS } else { exit::CERTIFICATE_FAILURE })
        }
        Command::Constants { spec } => {
            let exp = Experiment::load(&spec)?;
            let table = compute_constants(&exp, execution).map_err(|e| Failure {
                code: match e {
                    lightcone::LightconeError::Resource(_) => exit::RESOURCE,
                    _ => exit::INVALID_SPEC,
                },
                message: format!("{}: {e}", exp.path),
            })?;
            let text = match cli.format {
                Format::Table => constants_table(&table),
                Format::Json => json(&table)?,
                Format::Csv => constants_csv(&table),
            };
            print!("{text}");
            Ok(exit::PASS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code as u8)
        }
    }
}
