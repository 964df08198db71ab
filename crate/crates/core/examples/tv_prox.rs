//! Evaluates grad Θ* (a TV-denoising problem) on a noisy blocky image and
//! shows how the TV weight flattens it.
//!
//! `cargo run --release --example tv_prox`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use tpg::penalty::total_variation;
use tpg::prelude::*;

fn main() -> anyhow::Result<()> {
    let grid = Grid::pixels(32, 32)?;
    let clean = PrimalVector::from_fn(grid, |r, c| if (8..24).contains(&r) && (8..24).contains(&c) { 1.0 } else { 0.0 });
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let noisy = PrimalVector::from_fn(grid, |r, c| {
        let e: f64 = StandardNormal.sample(&mut rng);
        clean.as_slice()[grid.index(r, c)] + 0.2 * e
    });

    println!("{:>8} {:>12} {:>12}", "tv", "TV(x)", "|x - clean|");
    for tv in [0.0, 0.05, 0.2, 1.0] {
        let penalty = PenaltyConfig::new(1.0, tv, 300)?;
        // with beta = 1, grad Θ*(ξ) is the ROF denoiser applied to ξ
        let x = grad_theta_star(&noisy.clone().into_role(), &penalty);
        println!("{tv:>8} {:>12.3} {:>12.4}", total_variation(&x), x.distance(&clean)?);
    }
    Ok(())
}
