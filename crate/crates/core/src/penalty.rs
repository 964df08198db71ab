//! The penalty `Θ(x) = ‖x‖²/(2β) + w·|x|_TV`, its Bregman distance, and the
//! gradient of its convex conjugate.
//!
//! `∇Θ*(ξ)` is the minimizer of `Θ(z) − ⟨ξ, z⟩`, which is the ROF
//! (total-variation denoising) problem
//!
//! ```text
//! argmin_z  ‖z − βξ‖² / (2β) + w·|z|_TV
//! ```
//!
//! solved with a fixed budget of primal-dual hybrid gradient iterations. With
//! `w = 0` the map is exactly `ξ ↦ βξ`.
//!
//! The discrete total variation is isotropic with forward differences and
//! replicate boundaries. By default ([`TvScaling::Continuum`]) it is scaled by
//! the grid spacing so that it approximates the continuum TV of the grid
//! function; [`TvScaling::Pixel`] measures differences per grid step instead.
//! The two agree on unit-spacing grids.

use crate::error::{Error, Result};
use crate::spaces::{pairing, DualVector, Grid, PrimalVector};

/// Slack used by [`conjugate_gradient_lipschitz_check`] to absorb PDHG inexactness.
pub const LIPSCHITZ_SLACK: f64 = 1e-4;

/// Units of the gradient inside the TV seminorm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TvScaling {
    /// `∫|∇x|` with difference quotients: `h·Σ|Dx|`.
    #[default]
    Continuum,
    /// Differences per grid step integrated over cells: `h²·Σ|Dx|`.
    Pixel,
}

impl TvScaling {
    /// Factor multiplying the raw difference sum `Σ|Dx|` on a grid of spacing `h`.
    pub fn factor(self, h: f64) -> f64 {
        match self {
            TvScaling::Continuum => h,
            TvScaling::Pixel => h * h,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyConfig {
    /// Quadratic weight β.
    pub beta: f64,
    /// Multiplier on the TV seminorm.
    pub tv_weight: f64,
    /// Fixed number of inner PDHG iterations per evaluation of `∇Θ*`.
    pub pdhg_iters: usize,
    pub pdhg_step_primal: f64,
    pub pdhg_step_dual: f64,
    pub tv_scaling: TvScaling,
}

impl PenaltyConfig {
    /// Config with the default PDHG steps `1/√8`.
    pub fn new(beta: f64, tv_weight: f64, pdhg_iters: usize) -> Result<Self> {
        let step = 1.0 / 8f64.sqrt();
        let cfg = PenaltyConfig {
            beta,
            tv_weight,
            pdhg_iters,
            pdhg_step_primal: step,
            pdhg_step_dual: step,
            tv_scaling: TvScaling::Continuum,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Purely quadratic penalty `‖x‖²/(2β)`.
    pub fn quadratic(beta: f64) -> Result<Self> {
        Self::new(beta, 0.0, 1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::param("beta", format!("must be positive, got {}", self.beta)));
        }
        if !(self.tv_weight.is_finite() && self.tv_weight >= 0.0) {
            return Err(Error::param(
                "tv_weight",
                format!("must be nonnegative, got {}", self.tv_weight),
            ));
        }
        if self.pdhg_iters == 0 {
            return Err(Error::param("pdhg_iters", "must be positive"));
        }
        let (tau, sigma) = (self.pdhg_step_primal, self.pdhg_step_dual);
        if !(tau > 0.0 && sigma > 0.0 && tau.is_finite() && sigma.is_finite()) {
            return Err(Error::param("pdhg_step", "PDHG steps must be positive"));
        }
        // ‖∇‖² ≤ 8 for the 2D forward-difference gradient.
        if tau * sigma * 8.0 > 1.0 + 1e-12 {
            return Err(Error::param(
                "pdhg_step",
                format!("primal*dual*8 = {} exceeds 1", tau * sigma * 8.0),
            ));
        }
        Ok(())
    }

    /// Convexity exponent p (always 2 for this penalty).
    pub fn p(&self) -> f64 {
        2.0
    }

    /// Uniform convexity constant `c₀ = 1/(2β)`.
    pub fn c0(&self) -> f64 {
        1.0 / (2.0 * self.beta)
    }
}

/// Tolerance used by monitors to absorb the inexact inner solves.
pub fn tol_inexact(theta_reference: f64) -> f64 {
    1e-6 * (1.0 + theta_reference.abs())
}

/// Isotropic discrete total variation, scaled by the grid spacing.
pub fn total_variation(x: &PrimalVector) -> f64 {
    total_variation_scaled(x, TvScaling::Continuum)
}

pub fn total_variation_scaled(x: &PrimalVector, scaling: TvScaling) -> f64 {
    let g = x.grid();
    let v = x.as_slice();
    let mut sum = 0.0;
    for row in 0..g.rows {
        for col in 0..g.cols {
            let i = g.index(row, col);
            let dr = if row + 1 < g.rows { v[i + g.cols] - v[i] } else { 0.0 };
            let dc = if col + 1 < g.cols { v[i + 1] - v[i] } else { 0.0 };
            sum += (dr * dr + dc * dc).sqrt();
        }
    }
    scaling.factor(g.spacing) * sum
}

pub fn theta_value(x: &PrimalVector, cfg: &PenaltyConfig) -> f64 {
    let quad = x.norm().powi(2) / (2.0 * cfg.beta);
    if cfg.tv_weight == 0.0 {
        quad
    } else {
        quad + cfg.tv_weight * total_variation_scaled(x, cfg.tv_scaling)
    }
}

/// A point together with a (possibly inexact) subgradient `ξ ∈ ∂Θ(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubgradientPair {
    pub x: PrimalVector,
    pub xi: DualVector,
}

impl SubgradientPair {
    pub fn new(x: PrimalVector, xi: DualVector) -> Result<Self> {
        if x.len() != xi.len() {
            return Err(Error::Dimension {
                expected: x.len(),
                found: xi.len(),
            });
        }
        Ok(SubgradientPair { x, xi })
    }

    /// `(∇Θ*(ξ), ξ)`, the pair used to start every iteration.
    pub fn from_dual(xi: DualVector, cfg: &PenaltyConfig) -> Self {
        let x = grad_theta_star(&xi, cfg);
        SubgradientPair { x, xi }
    }
}

/// `D_ξΘ(x̄, x) = Θ(x̄) − Θ(x) − ⟨ξ, x̄ − x⟩`.
pub fn bregman_distance(xbar: &PrimalVector, pair: &SubgradientPair, cfg: &PenaltyConfig) -> Result<f64> {
    let diff = xbar.sub(&pair.x)?;
    Ok(theta_value(xbar, cfg) - theta_value(&pair.x, cfg) - pairing(&pair.xi, &diff)?)
}

/// Inner-solver state carried between consecutive evaluations of `∇Θ*`.
#[derive(Debug, Clone, Default)]
pub struct ProxWarmStart {
    primal: Vec<f64>,
    dual: Vec<f64>,
}

impl ProxWarmStart {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.primal.clear();
        self.dual.clear();
    }
}

/// `∇Θ*(ξ)` from a cold start.
pub fn grad_theta_star(xi: &DualVector, cfg: &PenaltyConfig) -> PrimalVector {
    grad_theta_star_warm(xi, cfg, &mut ProxWarmStart::new())
}

/// `∇Θ*(ξ)` warm-started from (and updating) `warm`.
pub fn grad_theta_star_warm(xi: &DualVector, cfg: &PenaltyConfig, warm: &mut ProxWarmStart) -> PrimalVector {
    let grid = xi.grid();
    let target: Vec<f64> = xi.as_slice().iter().map(|v| cfg.beta * v).collect();
    if cfg.tv_weight == 0.0 {
        return PrimalVector::from_raw(target, grid);
    }
    let weight = cfg.beta * cfg.tv_weight * cfg.tv_scaling.factor(grid.spacing) / grid.cell_area();
    let n = grid.len();
    if warm.primal.len() != n || warm.dual.len() != 2 * n {
        warm.primal = target.clone();
        warm.dual = vec![0.0; 2 * n];
    }
    rof_pdhg(
        grid,
        &target,
        weight,
        cfg.pdhg_iters,
        cfg.pdhg_step_primal,
        cfg.pdhg_step_dual,
        &mut warm.primal,
        &mut warm.dual,
    );
    PrimalVector::from_raw(warm.primal.clone(), grid)
}

/// Runs `iters` PDHG steps (over-relaxation 1) on
/// `min_z ½‖z − v‖² + weight·Σ|∇z|`, updating `z` and the dual field `p` in place.
#[allow(clippy::too_many_arguments)]
fn rof_pdhg(
    grid: Grid,
    v: &[f64],
    weight: f64,
    iters: usize,
    tau: f64,
    sigma: f64,
    z: &mut [f64],
    p: &mut [f64],
) {
    let n = grid.len();
    let (p_rows, p_cols) = p.split_at_mut(n);
    let mut z_bar = z.to_vec();
    let mut z_old = vec![0.0; n];
    let (rows, cols) = (grid.rows, grid.cols);
    let denom = 1.0 / (1.0 + tau);

    for _ in 0..iters {
        // dual ascent + projection onto the ball of radius `weight`
        for row in 0..rows {
            for col in 0..cols {
                let i = row * cols + col;
                let gr = if row + 1 < rows { z_bar[i + cols] - z_bar[i] } else { 0.0 };
                let gc = if col + 1 < cols { z_bar[i + 1] - z_bar[i] } else { 0.0 };
                let a = p_rows[i] + sigma * gr;
                let b = p_cols[i] + sigma * gc;
                let mag = (a * a + b * b).sqrt();
                let shrink = if mag > weight { weight / mag } else { 1.0 };
                p_rows[i] = a * shrink;
                p_cols[i] = b * shrink;
            }
        }
        z_old.copy_from_slice(z);
        // primal descent with the prox of ½‖· − v‖²
        for row in 0..rows {
            for col in 0..cols {
                let i = row * cols + col;
                let mut adj = 0.0;
                if row > 0 {
                    adj += p_rows[i - cols];
                }
                if row + 1 < rows {
                    adj -= p_rows[i];
                }
                if col > 0 {
                    adj += p_cols[i - 1];
                }
                if col + 1 < cols {
                    adj -= p_cols[i];
                }
                z[i] = (z[i] - tau * adj + tau * v[i]) * denom;
            }
        }
        for i in 0..n {
            z_bar[i] = 2.0 * z[i] - z_old[i];
        }
    }
}

/// Checks `‖∇Θ*(ξ₁) − ∇Θ*(ξ₂)‖ ≤ β‖ξ₁ − ξ₂‖` up to [`LIPSCHITZ_SLACK`].
pub fn conjugate_gradient_lipschitz_check(xi1: &DualVector, xi2: &DualVector, cfg: &PenaltyConfig) -> Result<bool> {
    let x1 = grad_theta_star(xi1, cfg);
    let x2 = grad_theta_star(xi2, cfg);
    let lhs = x1.distance(&x2)?;
    // (‖Δξ‖/(2c₀))^{1/(p-1)} with p = 2
    let rhs = (xi1.distance(xi2)? / (2.0 * cfg.c0())).powf(1.0 / (cfg.p() - 1.0));
    Ok(lhs <= rhs + LIPSCHITZ_SLACK)
}
