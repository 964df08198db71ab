use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tpg::experiment::{self, ExperimentConfig};
use tpg::Error;

#[derive(Parser)]
#[command(name = "tpg", version, about = "Two-point gradient regularization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the methods of an experiment config and write traces and reconstructions.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated method names to run (default: all).
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
    },
    /// Assemble the CT system matrix of a config and store it as a binary cache.
    AssembleCt {
        config: PathBuf,
        #[arg(long)]
        cache: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::Parameter { .. } => 2,
        Error::Divergence { .. } => 3,
        _ => 1,
    }
}

/// Reads a config; any failure to read or parse it counts as a config error.
fn load(path: &std::path::Path) -> tpg::Result<ExperimentConfig> {
    ExperimentConfig::from_path(path).map_err(|e| match e {
        Error::Config { .. } => e,
        other => Error::Config {
            location: path.display().to_string(),
            message: other.to_string(),
        },
    })
}

fn run(cli: Cli) -> tpg::Result<()> {
    match cli.command {
        Command::Run { config, seed, out, methods } => {
            let mut cfg = load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.output_dir = Some(o);
            }
            if let Some(names) = &methods {
                for n in names {
                    if !cfg.method.iter().any(|m| &m.name == n) {
                        return Err(Error::Config {
                            location: "--methods".into(),
                            message: format!("no method named `{n}` in {}", config.display()),
                        });
                    }
                }
            }
            let instance = experiment::build_problem(&cfg)?;
            let summaries = experiment::run_on_instance(&cfg, &instance, methods.as_deref())?;
            if let Some(dir) = &cfg.output_dir {
                experiment::write_outputs(&summaries, &instance, dir)?;
            }
            println!(
                "{:<16} {:>8} {:>12} {:>12} {:>10} {:>10}",
                "method", "n_delta", "error", "stop", "mono_viol", "time"
            );
            for s in &summaries {
                println!(
                    "{:<16} {:>8} {:>12.5} {:>12} {:>10} {:>9.2}s",
                    s.method,
                    s.n_delta,
                    s.final_error,
                    s.stop_reason.as_str(),
                    s.monotonicity_violations,
                    s.wall_time.as_secs_f64()
                );
            }
            Ok(())
        }
        Command::AssembleCt { config, cache } => {
            let cfg = load(&config)?;
            let geom = experiment::ct_geometry(&cfg)?;
            let matrix = tpg::ct::assemble_matrix(&geom);
            matrix.write_cache(&cache)?;
            let (m, n) = matrix.dims();
            println!("{m} x {n}, {} nonzeros -> {}", matrix.nnz(), cache.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
