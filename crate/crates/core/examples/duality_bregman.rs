//! Duality mapping and Bregman distance identities on random vectors.
//!
//! `cargo run --example duality_bregman`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use tpg::prelude::*;

fn main() -> anyhow::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| StandardNormal.sample(&mut rng)).collect() };

    // J_s(r) pairs with r to ‖r‖^s and has norm ‖r‖^{s-1}
    let r = DataVector::from_vec(draw(20), 0.5)?;
    for s in [1.5, 2.0, 3.0] {
        let j = duality_map_s(&r, s)?;
        println!(
            "s = {s}: <J r, r> = {:.6}  |r|^s = {:.6}  |J r| = {:.6}  |r|^(s-1) = {:.6}",
            j.inner(&r)?,
            r.norm().powf(s),
            j.norm(),
            r.norm().powf(s - 1.0)
        );
    }

    let grid = Grid::pixels(5, 5)?;
    let penalty = PenaltyConfig::new(2.0, 0.2, 500)?;
    let x = PrimalVector::from_vec(draw(25), grid)?;
    let pair = SubgradientPair::from_dual(DualVector::from_vec(draw(25), grid)?, &penalty);
    println!("theta(x) = {:.6}", theta_value(&x, &penalty));
    println!("D(x, x_xi) = {:.6}", bregman_distance(&x, &pair, &penalty)?);
    println!("D(x_xi, x_xi) = {:.2e}", bregman_distance(&pair.x.clone(), &pair, &penalty)?);
    Ok(())
}
