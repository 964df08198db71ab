//! Runs every method of a TOML experiment config and writes traces,
//! reconstructions and a summary into an output directory.
//!
//! `cargo run --release --example run_config -- configs/ct_desk.toml out/`

use std::path::PathBuf;

use anyhow::Context;
use tpg::experiment::{self, ExperimentConfig};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = PathBuf::from(args.next().context("usage: run_config <config.toml> [out-dir]")?);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "run_config_out".into()));

    let cfg = ExperimentConfig::from_path(&config)?;
    let instance = experiment::build_problem(&cfg)?;
    let runs = experiment::run_on_instance(&cfg, &instance, None)?;
    experiment::write_outputs(&runs, &instance, &out)?;
    for r in &runs {
        println!(
            "{:<12} n_delta {:>5}  error {:.5}  {:?}",
            r.method, r.n_delta, r.final_error, r.wall_time
        );
    }
    println!("outputs in {}", out.display());
    Ok(())
}
