//! Landweber against Nesterov acceleration on a 64x64 CT problem with 1%
//! noise, both stopped by the discrepancy principle.
//!
//! `cargo run --release --example ct_landweber_nesterov`

use tpg::experiment::add_noise;
use tpg::prelude::*;

fn main() -> anyhow::Result<()> {
    let geom = ParallelBeamGeometry::new(64, 64, 30, 95)?;
    let op = CtOperator::from_geometry(&geom)?;
    let truth = shepp_logan(64, 64)?;
    let exact = op.apply(&truth)?;
    let (y, delta) = add_noise(&exact, 0.01 * exact.norm(), 42)?;

    let penalty = PenaltyConfig::new(1.0, 1.0, 100)?;
    let tau = 1.05;
    let mu0 = 1.8 * (1.0 - 1.0 / tau) / penalty.beta;
    let reference = Reference {
        solution: truth.clone(),
        relative_error: true,
    };

    for (name, strategy) in [("landweber", LambdaStrategy::Zero), ("nesterov", LambdaStrategy::Nesterov { alpha: 5.0 })] {
        let cfg = SolverConfig::new(tau, mu0, 20000.0, delta, strategy)?;
        let start = SubgradientPair::from_dual(DualVector::zeros(truth.grid()), &penalty);
        let out = tpg_run(&op, &y, start, &penalty, &cfg, Some(&reference))?;
        println!(
            "{name:<10} n_delta {:>4}  relative error {:.4}",
            out.n_delta(),
            reference.error_of(&out.solution)?
        );
    }
    Ok(())
}
