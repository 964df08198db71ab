//! Identifies the coefficient c in -Δu + cu = f from noisy interior
//! observations of u on a 64x64 grid, with Landweber and Nesterov steps.
//!
//! `cargo run --release --example elliptic_identification -- [cells]`

use tpg::experiment::add_noise;
use tpg::penalty::TvScaling;
use tpg::prelude::*;

fn main() -> anyhow::Result<()> {
    let cells: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(64);
    let grid = EllipticGrid::new(cells)?;
    let data = EllipticProblemData::benchmark(grid);
    let op = data.operator()?;
    let (y, delta) = add_noise(&data.exact_data(), 1e-3, 42)?;

    let mut penalty = PenaltyConfig::new(10.0, 1.0, 200)?;
    penalty.tv_scaling = TvScaling::Pixel;
    let mu0 = (1.0 - 1.0 / 1.05) / penalty.beta;
    let reference = Reference {
        solution: data.c_true.clone(),
        relative_error: false,
    };

    for (name, strategy) in [("landweber", LambdaStrategy::Zero), ("nesterov", LambdaStrategy::Nesterov { alpha: 5.0 })] {
        let cfg = SolverConfig::new(1.05, mu0, 20000.0, delta, strategy)?;
        let start = SubgradientPair::from_dual(DualVector::zeros(grid.node_grid()), &penalty);
        let out = tpg_run(&op, &y, start, &penalty, &cfg, Some(&reference))?;
        let c = out.solution.as_slice();
        let (lo, hi) = c.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        println!(
            "{name:<10} n_delta {:>4}  |c - c_true| {:.4}  range [{lo:.3}, {hi:.3}]",
            out.n_delta(),
            reference.error_of(&out.solution)?
        );
    }
    Ok(())
}
