//! Discrete backtracking search for the combination parameter λₙ.
//!
//! For `j = 1..=j_max` the candidate `λ = βₙ(i_{n-1} + j)` is probed: the
//! extrapolated point is formed, pushed through `∇Θ*` and `F`, and accepted
//! once
//!
//! ```text
//! (λ + λ^{p*}) ‖ξₙ − ξₙ₋₁‖^{p*} ≤ γ₁ μₙ ‖F(zₙ) − y^δ‖^s
//! ```
//!
//! holds. A probe that already meets the discrepancy level resets λ to 0.
//! When every probe fails, λ falls back to the δ-formula with constant γ₀.

use crate::error::{Error, Result};
use crate::solver::{lambda_delta_formula, nesterov_lambda, IterationState, SolverConfig};
use crate::spaces::{DualVector, PrimalVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbtsConfig {
    pub j_max: usize,
    pub alpha: f64,
    /// Constant of the fallback δ-formula.
    pub gamma0: f64,
    /// Constant of the acceptance inequality.
    pub gamma1: f64,
    /// `q(m) = m^{-q_exponent}`.
    pub q_exponent: f64,
    /// Radius entering the middle term of βₙ; `+∞` disables it.
    pub rho: f64,
}

impl DbtsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.j_max == 0 {
            return Err(Error::param("j_max", "must be positive"));
        }
        if !(self.alpha >= 3.0 && self.alpha.is_finite()) {
            return Err(Error::param("alpha", format!("must be at least 3, got {}", self.alpha)));
        }
        if !(self.gamma0 > 0.0 && self.gamma0.is_finite()) {
            return Err(Error::param("gamma0", "must be positive"));
        }
        if !(self.gamma1 > 0.0 && self.gamma1.is_finite()) {
            return Err(Error::param("gamma1", "must be positive"));
        }
        // summability of q needs an exponent above 1
        if !(self.q_exponent > 1.0 && self.q_exponent.is_finite()) {
            return Err(Error::param("q_exponent", format!("must exceed 1, got {}", self.q_exponent)));
        }
        if !(self.rho > 0.0) {
            return Err(Error::param("rho", "must be positive (or +inf)"));
        }
        Ok(())
    }

    pub fn q(&self, m: usize) -> f64 {
        (m as f64).powf(-self.q_exponent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DbtsBranch {
    DiscrepancyHit,
    ConditionAccepted,
    Fallback,
}

impl DbtsBranch {
    pub fn as_str(&self) -> &'static str {
        match self {
            DbtsBranch::DiscrepancyHit => "discrepancy",
            DbtsBranch::ConditionAccepted => "accepted",
            DbtsBranch::Fallback => "fallback",
        }
    }
}

/// Everything computed while evaluating one candidate λ.
#[derive(Debug, Clone)]
pub struct Probe {
    /// Extrapolated dual point ζ.
    pub zeta: DualVector,
    /// `z = ∇Θ*(ζ)`.
    pub z: PrimalVector,
    pub residual_norm: f64,
    /// `L(z)* J_s(F(z) − y^δ)`; absent once the residual meets the discrepancy level.
    pub gradient: Option<DualVector>,
    pub mu: f64,
}

#[derive(Debug, Clone)]
pub struct DbtsOutcome {
    pub lambda: f64,
    pub i_n: usize,
    pub branch: DbtsBranch,
    /// The accepted probe, handed back so the caller can skip re-evaluating `F`.
    pub accepted: Option<Probe>,
}

/// `βₙ(i) = min{ q(i)/‖Δξ‖, p*(2c₀)^{p*}ρ^p / (4‖Δξ‖^{p*}), n/(n+α) }`.
pub fn beta_n(i: usize, xi_diff_norm: f64, n: usize, cfg: &DbtsConfig, c0: f64) -> Result<f64> {
    if i < 1 {
        return Err(Error::param("i", "counter argument of beta_n starts at 1"));
    }
    let cap = nesterov_lambda(n, cfg.alpha);
    if xi_diff_norm == 0.0 {
        return Ok(cap);
    }
    let (p, p_star) = (2.0, 2.0);
    let first = cfg.q(i) / xi_diff_norm;
    let middle = if cfg.rho.is_infinite() {
        f64::INFINITY
    } else {
        p_star * (2.0 * c0).powf(p_star) * cfg.rho.powf(p) / (4.0 * xi_diff_norm.powf(p_star))
    };
    Ok(first.min(middle).min(cap))
}

/// Runs the backtracking search at step `state.n ≥ 1`.
///
/// `probe(λ)` must form `ζ = ξₙ + λ(ξₙ − ξₙ₋₁)`, `z = ∇Θ*(ζ)` and evaluate the
/// residual and step size there. It is called at most `j_max` times.
pub fn dbts_select(
    state: &IterationState,
    cfg: &DbtsConfig,
    solver: &SolverConfig,
    c0: f64,
    probe: &mut dyn FnMut(f64) -> Result<Probe>,
) -> Result<DbtsOutcome> {
    let n = state.n;
    let xi_diff_norm = state.xi_curr.distance(&state.xi_prev)?;
    let threshold = solver.tau * solver.noise_level_delta;
    let p_star = 2.0;
    for j in 1..=cfg.j_max {
        let i = state.i_counter + j;
        let lambda = beta_n(i, xi_diff_norm, n, cfg, c0)?;
        let candidate = probe(lambda)?;
        if candidate.residual_norm <= threshold {
            return Ok(DbtsOutcome {
                lambda: 0.0,
                i_n: i,
                branch: DbtsBranch::DiscrepancyHit,
                accepted: None,
            });
        }
        if admissible(lambda, xi_diff_norm, candidate.mu, candidate.residual_norm, cfg.gamma1, solver.s, p_star) {
            return Ok(DbtsOutcome {
                lambda,
                i_n: i,
                branch: DbtsBranch::ConditionAccepted,
                accepted: Some(candidate),
            });
        }
    }
    Ok(DbtsOutcome {
        lambda: lambda_delta_formula(xi_diff_norm, n, cfg.gamma0, cfg.alpha, solver.noise_level_delta),
        i_n: state.i_counter + cfg.j_max,
        branch: DbtsBranch::Fallback,
        accepted: None,
    })
}

/// `(λ + λ^{p*})‖Δξ‖^{p*} ≤ γ₁ μ ‖r‖^s`
pub fn admissible(lambda: f64, xi_diff_norm: f64, mu: f64, residual_norm: f64, gamma1: f64, s: f64, p_star: f64) -> bool {
    (lambda + lambda.powf(p_star)) * xi_diff_norm.powf(p_star) <= gamma1 * mu * residual_norm.powf(s)
}
