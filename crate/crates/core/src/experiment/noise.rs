use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::spaces::DataVector;

/// Name of the noise generator, recorded so outputs can be traced to it.
pub const NOISE_GENERATOR: &str = "chacha8+standard-normal/v1";

/// Returns `b + δ·e/‖e‖` with `e` standard Gaussian from a ChaCha8 stream
/// seeded by `seed`, so that `‖b^δ − b‖ = δ` in the data-space norm.
pub fn add_noise(b: &DataVector, delta: f64, seed: u64) -> Result<(DataVector, f64)> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::param("delta", format!("must be nonnegative, got {delta}")));
    }
    if delta == 0.0 {
        return Ok((b.clone(), 0.0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e: Vec<f64> = (0..b.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let e = DataVector::from_raw(e, b.weight());
    let scale = delta / e.norm();
    let noisy = b.add_scaled(scale, &e)?;
    Ok((noisy, delta))
}
