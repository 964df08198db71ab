//! TPG with the discrete backtracking search on a 64x64 CT problem. Prints
//! the accepted combination parameters and which branch produced them.
//!
//! `cargo run --release --example ct_dbts -- [j_max]`

use std::collections::BTreeMap;

use tpg::experiment::add_noise;
use tpg::prelude::*;

fn main() -> anyhow::Result<()> {
    let j_max: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1);
    let geom = ParallelBeamGeometry::new(64, 64, 30, 95)?;
    let op = CtOperator::from_geometry(&geom)?;
    let truth = shepp_logan(64, 64)?;
    let exact = op.apply(&truth)?;
    let (y, delta) = add_noise(&exact, 0.01 * exact.norm(), 42)?;

    let penalty = PenaltyConfig::new(1.0, 1.0, 100)?;
    let dbts = DbtsConfig {
        j_max,
        alpha: 5.0,
        gamma0: 0.1,
        gamma1: 0.4,
        q_exponent: 1.1,
        rho: f64::INFINITY,
    };
    let cfg = SolverConfig::new(1.05, 1.8 * (1.0 - 1.0 / 1.05), 20000.0, delta, LambdaStrategy::Dbts(dbts))?;
    let reference = Reference {
        solution: truth.clone(),
        relative_error: true,
    };
    let start = SubgradientPair::from_dual(DualVector::zeros(truth.grid()), &penalty);
    let out = tpg_run(&op, &y, start, &penalty, &cfg, Some(&reference))?;

    println!("n_delta {}  relative error {:.4}", out.n_delta(), reference.error_of(&out.solution)?);
    println!("{:>6} {:>10} {:>10} {:>6}", "n", "lambda", "|dxi|", "i_n");
    let every = (out.records.len() / 15).max(1);
    for r in out.records.iter().step_by(every) {
        println!("{:>6} {:>10.4} {:>10.4} {:>6}", r.n, r.lambda, r.xi_step_norm, r.i_n);
    }
    let mut branches = BTreeMap::new();
    for r in &out.records {
        if let Some(b) = r.branch {
            *branches.entry(b.as_str()).or_insert(0) += 1;
        }
    }
    println!("branches: {branches:?}");
    println!("sum lambda |dxi| = {:.4}", out.lambda_step_sum());
    Ok(())
}
