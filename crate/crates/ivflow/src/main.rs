use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ivflow::coeffs::CoeffTable;
use ivflow::config::{cost_estimate, validate, ExperimentConfig};
use ivflow::runner;

/// Interpolating vector fields for near-identity maps: approximate flows,
/// adiabatic invariants and Poincare sections for maps.
#[derive(Parser)]
#[command(name = "ivflow", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config.
    Run {
        /// Path to the experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Directory for relative output paths.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker thread count (default: one per core).
        #[arg(long)]
        workers: Option<usize>,
        /// Suppress progress notes.
        #[arg(long)]
        quiet: bool,
    },
    /// Validate a config and print the cost estimate without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        quiet: bool,
    },
    /// Dump the derivative coefficient table p_nk as CSV.
    Coeffs {
        /// Interpolation order.
        #[arg(long)]
        n: usize,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> ivflow::Result<ExitCode> {
    match cli.command {
        Command::Run {
            config,
            out,
            workers,
            quiet,
        } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let summary = runner::run(&cfg, out.as_deref(), workers, quiet)?;
            if !quiet {
                println!(
                    "ok: {} ({} map applications, {} field evaluations)",
                    summary.outputs[0].display(),
                    summary.map_applications,
                    summary.field_evaluations
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { config, quiet } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let report = validate(&cfg);
            if let Some(cost) = cost_estimate(&cfg) {
                if !quiet {
                    println!(
                        "cost estimate: ~{:.2e} map applications over {} points",
                        cost.map_applications as f64, cost.points
                    );
                }
            }
            if report.is_ok() {
                if !quiet {
                    println!("config ok: {}", cfg.kind.name());
                }
                Ok(ExitCode::SUCCESS)
            } else {
                for p in &report.problems {
                    eprintln!("problem: {p}");
                }
                Ok(ExitCode::from(2))
            }
        }
        Command::Coeffs { n, out } => {
            let table = CoeffTable::new(n)?;
            match out {
                Some(path) => {
                    let mut buf = Vec::new();
                    table.write_csv(&mut buf)?;
                    std::fs::write(path, buf)?;
                }
                None => {
                    table.write_csv(std::io::stdout().lock())?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
