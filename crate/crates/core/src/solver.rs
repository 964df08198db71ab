//! The two-point gradient iteration with a convex penalty.
//!
//! Starting from `ξ₋₁ = ξ₀`, `x₋₁ = x₀`, each step forms
//!
//! ```text
//! ζₙ   = ξₙ + λₙ (ξₙ − ξₙ₋₁)
//! zₙ   = ∇Θ*(ζₙ)
//! ξₙ₊₁ = ζₙ − μₙ L(zₙ)* J_s(F(zₙ) − y^δ)
//! xₙ₊₁ = ∇Θ*(ξₙ₊₁)
//! ```
//!
//! and stops at the first `n` with `‖F(zₙ) − y^δ‖ ≤ τδ`, returning `xₙ`.
//! `λₙ ≡ 0` is the Landweber iteration; `λₙ = n/(n+α)` is the Nesterov variant.

use log::warn;

use crate::dbts::{admissible, dbts_select, DbtsBranch, DbtsConfig, Probe};
use crate::error::{Error, Result};
use crate::operators::ForwardOperator;
use crate::penalty::{bregman_distance, grad_theta_star_warm, theta_value, tol_inexact, PenaltyConfig, ProxWarmStart, SubgradientPair};
use crate::spaces::{duality_map_s, DataVector, DualVector, PrimalVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaStrategy {
    /// λₙ = 0 (Landweber).
    Zero,
    /// λₙ = n/(n+α).
    Nesterov { alpha: f64 },
    /// λₙ = min{γ₀δ^p/‖Δξ‖^{p*}, n/(n+α)}.
    DeltaFormula { gamma0: f64, alpha: f64 },
    /// The p = 2 quadratic-root choice with constant `M`.
    DeltaFormulaRoot { m_const: f64, alpha: f64 },
    Dbts(DbtsConfig),
}

impl LambdaStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            LambdaStrategy::Zero => "zero",
            LambdaStrategy::Nesterov { .. } => "nesterov",
            LambdaStrategy::DeltaFormula { .. } => "delta-formula",
            LambdaStrategy::DeltaFormulaRoot { .. } => "delta-formula-root",
            LambdaStrategy::Dbts(_) => "dbts",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Discrepancy constant τ > 1.
    pub tau: f64,
    pub mu0_bar: f64,
    pub mu1_bar: f64,
    /// Duality-map exponent.
    pub s: f64,
    /// Tangential cone constant.
    pub eta: f64,
    pub n_max: usize,
    pub lambda_strategy: LambdaStrategy,
    pub noise_level_delta: f64,
    /// Constant ν > 1 of the summability diagnostic.
    pub nu: f64,
}

impl SolverConfig {
    /// Config with `s = 2`, `η = 0`, `n_max = 50000` and `ν = 2`.
    pub fn new(tau: f64, mu0_bar: f64, mu1_bar: f64, noise_level_delta: f64, lambda_strategy: LambdaStrategy) -> Result<Self> {
        let cfg = SolverConfig {
            tau,
            mu0_bar,
            mu1_bar,
            s: 2.0,
            eta: 0.0,
            n_max: 50_000,
            lambda_strategy,
            noise_level_delta,
            nu: 2.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 1.0 && self.tau.is_finite()) {
            return Err(Error::param("tau", format!("must exceed 1, got {}", self.tau)));
        }
        if !(self.mu0_bar > 0.0 && self.mu0_bar.is_finite()) {
            return Err(Error::param("mu0_bar", "must be positive"));
        }
        if !(self.mu1_bar > 0.0 && self.mu1_bar.is_finite()) {
            return Err(Error::param("mu1_bar", "must be positive"));
        }
        if !(self.s > 1.0 && self.s.is_finite()) {
            return Err(Error::param("s", format!("must exceed 1, got {}", self.s)));
        }
        if !(0.0..1.0).contains(&self.eta) {
            return Err(Error::param("eta", format!("must lie in [0, 1), got {}", self.eta)));
        }
        if self.n_max == 0 {
            return Err(Error::param("n_max", "must be positive"));
        }
        if !(self.noise_level_delta >= 0.0 && self.noise_level_delta.is_finite()) {
            return Err(Error::param("noise_level_delta", "must be nonnegative"));
        }
        if !(self.nu > 1.0) {
            return Err(Error::param("nu", "must exceed 1"));
        }
        match self.lambda_strategy {
            LambdaStrategy::Zero => {}
            LambdaStrategy::Nesterov { alpha } => check_alpha(alpha)?,
            LambdaStrategy::DeltaFormula { gamma0, alpha } => {
                check_alpha(alpha)?;
                if !(gamma0 > 0.0) {
                    return Err(Error::param("gamma0", "must be positive"));
                }
            }
            LambdaStrategy::DeltaFormulaRoot { m_const, alpha } => {
                check_alpha(alpha)?;
                if !(m_const > 0.0) {
                    return Err(Error::param("m_const", "must be positive"));
                }
            }
            LambdaStrategy::Dbts(d) => d.validate()?,
        }
        Ok(())
    }

    /// `c₁ = 1 − η − (1+η)/τ − (1/p*)(μ̄₀/(2c₀))^{p*−1}`.
    pub fn c1(&self, c0: f64) -> f64 {
        let p_star = 2.0;
        1.0 - self.eta - (1.0 + self.eta) / self.tau - (self.mu0_bar / (2.0 * c0)).powf(p_star - 1.0) / p_star
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= 3.0 && alpha.is_finite()) {
        return Err(Error::param("alpha", format!("must be at least 3, got {alpha}")));
    }
    Ok(())
}

/// The two most recent dual iterates and the current primal iterate.
#[derive(Debug, Clone)]
pub struct IterationState {
    pub xi_curr: DualVector,
    pub xi_prev: DualVector,
    pub x_curr: PrimalVector,
    pub n: usize,
    /// Backtracking counter `i_{n-1}`; starts at 0.
    pub i_counter: usize,
}

impl IterationState {
    pub fn start(pair: SubgradientPair) -> Self {
        IterationState {
            xi_prev: pair.xi.clone(),
            xi_curr: pair.xi,
            x_curr: pair.x,
            n: 0,
            i_counter: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub n: usize,
    pub lambda: f64,
    pub mu: f64,
    /// `‖F(zₙ) − y^δ‖`
    pub residual_norm: f64,
    /// `‖ξₙ − ξₙ₋₁‖`
    pub xi_step_norm: f64,
    /// `D_{ξₙ}Θ(x̂, xₙ)` when a reference solution is supplied.
    pub bregman_to_reference: Option<f64>,
    /// `Dₙ − Dₙ₋₁`
    pub delta_n: Option<f64>,
    /// Error of `xₙ` against the reference (relative or absolute, per [`Reference`]).
    pub error: Option<f64>,
    pub i_n: usize,
    pub branch: Option<DbtsBranch>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Discrepancy,
    Budget,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::Discrepancy => "discrepancy",
            StopReason::Budget => "budget",
        }
    }
}

/// Known solution used for error and Bregman-distance telemetry.
#[derive(Debug, Clone)]
pub struct Reference {
    pub solution: PrimalVector,
    /// Report `‖xₙ − x̂‖/‖x̂‖` instead of `‖xₙ − x̂‖`.
    pub relative_error: bool,
}

impl Reference {
    pub fn error_of(&self, x: &PrimalVector) -> Result<f64> {
        let d = x.distance(&self.solution)?;
        if self.relative_error {
            Ok(d / self.solution.norm())
        } else {
            Ok(d)
        }
    }
}

#[derive(Debug, Clone)]
pub struct TpgOutcome {
    pub solution: PrimalVector,
    pub xi: DualVector,
    pub records: Vec<IterationRecord>,
    pub stop_reason: StopReason,
    /// Constant `c₁` for this configuration; nonpositive values void the theory.
    pub c1: f64,
}

impl TpgOutcome {
    pub fn n_delta(&self) -> usize {
        self.records.last().map_or(0, |r| r.n)
    }

    /// `Σₙ λₙ ‖ξₙ − ξₙ₋₁‖`
    pub fn lambda_step_sum(&self) -> f64 {
        self.records.iter().map(|r| r.lambda * r.xi_step_norm).sum()
    }
}

/// `μₙ` from the step-size rule, given `r = F(zₙ) − y^δ` and `L(zₙ)* J_s(r)`.
pub fn step_size(r: &DataVector, lstar_jr: &DualVector, cfg: &SolverConfig) -> f64 {
    step_size_from_norms(r.norm(), lstar_jr.norm(), cfg)
}

pub fn step_size_from_norms(residual_norm: f64, lstar_jr_norm: f64, cfg: &SolverConfig) -> f64 {
    if residual_norm <= cfg.tau * cfg.noise_level_delta {
        return 0.0;
    }
    let (p, s) = (2.0, cfg.s);
    let first = if lstar_jr_norm == 0.0 {
        f64::INFINITY
    } else {
        cfg.mu0_bar * residual_norm.powf(p * (s - 1.0)) / lstar_jr_norm.powf(p)
    };
    first.min(cfg.mu1_bar) * residual_norm.powf(p - s)
}

pub fn nesterov_lambda(n: usize, alpha: f64) -> f64 {
    n as f64 / (n as f64 + alpha)
}

/// `min{ γ₀δ^p/‖Δξ‖^{p*}, n/(n+α) }` with p = p* = 2.
pub fn lambda_delta_formula(xi_diff_norm: f64, n: usize, gamma0: f64, alpha: f64, delta: f64) -> f64 {
    let cap = nesterov_lambda(n, alpha);
    if xi_diff_norm == 0.0 {
        return cap;
    }
    (gamma0 * delta.powi(2) / xi_diff_norm.powi(2)).min(cap)
}

/// `min{ −½ + √(¼ + 4c₀Mτ²δ²/‖Δξ‖²), n/(n+α) }`.
pub fn lambda_delta_root(xi_diff_norm: f64, n: usize, c0: f64, m_const: f64, tau: f64, delta: f64, alpha: f64) -> f64 {
    let cap = nesterov_lambda(n, alpha);
    if xi_diff_norm == 0.0 {
        return cap;
    }
    let inner = 0.25 + 4.0 * c0 * m_const * tau * tau * delta * delta / (xi_diff_norm * xi_diff_norm);
    (-0.5 + inner.sqrt()).min(cap)
}

/// Runs the iteration without per-step callbacks.
pub fn tpg_run(
    op: &dyn ForwardOperator,
    y_delta: &DataVector,
    x0_pair: SubgradientPair,
    penalty: &PenaltyConfig,
    cfg: &SolverConfig,
    reference: Option<&Reference>,
) -> Result<TpgOutcome> {
    tpg_run_observed(op, y_delta, x0_pair, penalty, cfg, reference, &mut |_| {})
}

/// Runs the iteration, handing every record to `observer` as it is produced.
pub fn tpg_run_observed(
    op: &dyn ForwardOperator,
    y_delta: &DataVector,
    x0_pair: SubgradientPair,
    penalty: &PenaltyConfig,
    cfg: &SolverConfig,
    reference: Option<&Reference>,
    observer: &mut dyn FnMut(&IterationRecord),
) -> Result<TpgOutcome> {
    cfg.validate()?;
    penalty.validate()?;
    if y_delta.len() != op.data_len() {
        return Err(Error::Dimension {
            expected: op.data_len(),
            found: y_delta.len(),
        });
    }
    let c0 = penalty.c0();
    let c1 = cfg.c1(c0);
    if c1 <= 0.0 {
        warn!("c1 = {c1:.4e} <= 0: step-size constant mu0_bar = {} is outside the admissible range", cfg.mu0_bar);
    }
    let threshold = cfg.tau * cfg.noise_level_delta;
    let mut warm = ProxWarmStart::new();
    let mut state = IterationState::start(x0_pair);
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut prev_bregman: Option<f64> = None;

    loop {
        let n = state.n;
        let xi_step = state.xi_curr.sub(&state.xi_prev)?;
        let xi_step_norm = xi_step.norm();

        // Evaluates the probe for a given λ at the current state.
        let evaluate = |lambda: f64, warm: &mut ProxWarmStart| -> Result<Probe> {
            let (zeta, z) = if lambda == 0.0 {
                (state.xi_curr.clone(), state.x_curr.clone())
            } else {
                let zeta = state.xi_curr.add_scaled(lambda, &xi_step)?;
                let z = grad_theta_star_warm(&zeta, penalty, warm);
                (zeta, z)
            };
            let mut residual_norm = 0.0;
            let (_, gradient) = op.apply_with_adjoint(&z, &mut |fz| {
                let r = fz.sub(y_delta)?;
                residual_norm = r.norm();
                if residual_norm <= threshold || !residual_norm.is_finite() {
                    Ok(None)
                } else {
                    Ok(Some(duality_map_s(&r, cfg.s)?))
                }
            })?;
            let mu = match &gradient {
                Some(g) => step_size_from_norms(residual_norm, g.norm(), cfg),
                None => 0.0,
            };
            Ok(Probe {
                zeta,
                z,
                residual_norm,
                gradient,
                mu,
            })
        };

        let (lambda, i_n, branch, probe) = if n == 0 {
            (0.0, state.i_counter, None, evaluate(0.0, &mut warm)?)
        } else {
            match cfg.lambda_strategy {
                LambdaStrategy::Zero => (0.0, state.i_counter, None, evaluate(0.0, &mut warm)?),
                LambdaStrategy::Nesterov { alpha } => {
                    let l = nesterov_lambda(n, alpha);
                    (l, state.i_counter, None, evaluate(l, &mut warm)?)
                }
                LambdaStrategy::DeltaFormula { gamma0, alpha } => {
                    let l = lambda_delta_formula(xi_step_norm, n, gamma0, alpha, cfg.noise_level_delta);
                    (l, state.i_counter, None, evaluate(l, &mut warm)?)
                }
                LambdaStrategy::DeltaFormulaRoot { m_const, alpha } => {
                    let l = lambda_delta_root(xi_step_norm, n, c0, m_const, cfg.tau, cfg.noise_level_delta, alpha);
                    (l, state.i_counter, None, evaluate(l, &mut warm)?)
                }
                LambdaStrategy::Dbts(dbts) => {
                    let outcome = dbts_select(&state, &dbts, cfg, c0, &mut |l| evaluate(l, &mut warm))?;
                    let probe = match outcome.accepted {
                        Some(p) => p,
                        None => evaluate(outcome.lambda, &mut warm)?,
                    };
                    (outcome.lambda, outcome.i_n, Some(outcome.branch), probe)
                }
            }
        };

        let (bregman, delta_n, error) = match reference {
            Some(re) => {
                let pair = SubgradientPair {
                    x: state.x_curr.clone(),
                    xi: state.xi_curr.clone(),
                };
                let d = bregman_distance(&re.solution, &pair, penalty)?;
                let delta = prev_bregman.map_or(0.0, |p| d - p);
                prev_bregman = Some(d);
                (Some(d), Some(delta), Some(re.error_of(&state.x_curr)?))
            }
            None => (None, None, None),
        };

        let record = IterationRecord {
            n,
            lambda,
            mu: probe.mu,
            residual_norm: probe.residual_norm,
            xi_step_norm,
            bregman_to_reference: bregman,
            delta_n,
            error,
            i_n,
            branch,
        };
        if !probe.residual_norm.is_finite() {
            return Err(Error::Divergence {
                last: Box::new(record),
            });
        }
        observer(&record);
        records.push(record);

        let stop = if probe.residual_norm <= threshold {
            Some(StopReason::Discrepancy)
        } else if n >= cfg.n_max {
            Some(StopReason::Budget)
        } else {
            None
        };
        if let Some(stop_reason) = stop {
            return Ok(TpgOutcome {
                solution: state.x_curr,
                xi: state.xi_curr,
                records,
                stop_reason,
                c1,
            });
        }

        let gradient = probe.gradient.expect("gradient is present above the discrepancy level");
        let xi_next = probe.zeta.add_scaled(-probe.mu, &gradient)?;
        if !xi_next.is_finite() {
            return Err(Error::Divergence {
                last: Box::new(records.pop().expect("record pushed above")),
            });
        }
        let x_next = grad_theta_star_warm(&xi_next, penalty, &mut warm);
        state.xi_prev = std::mem::replace(&mut state.xi_curr, xi_next);
        state.x_curr = x_next;
        state.i_counter = i_n;
        state.n += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityViolation {
    pub n: usize,
    pub increase: f64,
}

/// Steps where `D_{ξₙ}Θ(x̂, xₙ)` grew by more than `tol` over the previous step.
pub fn monitor_monotonicity(records: &[IterationRecord], tol: f64) -> Vec<MonotonicityViolation> {
    records
        .windows(2)
        .filter_map(|w| match (w[0].bregman_to_reference, w[1].bregman_to_reference) {
            (Some(prev), Some(cur)) if cur > prev + tol => Some(MonotonicityViolation {
                n: w[1].n,
                increase: cur - prev,
            }),
            _ => None,
        })
        .collect()
}

/// Monitor tolerance for a reference solution under `penalty`.
pub fn monitor_tolerance(reference: &PrimalVector, penalty: &PenaltyConfig) -> f64 {
    tol_inexact(theta_value(reference, penalty))
}

/// Steps logged as accepted by the backtracking search whose logged values
/// violate the acceptance inequality.
pub fn condition_violations(records: &[IterationRecord], gamma1: f64, s: f64) -> Vec<usize> {
    records
        .iter()
        .filter(|r| r.branch == Some(DbtsBranch::ConditionAccepted))
        .filter(|r| !admissible(r.lambda, r.xi_step_norm, r.mu, r.residual_norm, gamma1, s, 2.0))
        .map(|r| r.n)
        .collect()
}

/// Ratio of `Σ μₘ‖rₘ‖^s` to the bound `ν/((ν−1)c₁)·D_{ξ₀}Θ(x̂, x₀)`;
/// values ≤ 1 agree with the theory. `None` when `c₁ ≤ 0` or no reference
/// distance was logged.
pub fn summability_ratio(records: &[IterationRecord], cfg: &SolverConfig, c1: f64) -> Option<f64> {
    if c1 <= 0.0 {
        return None;
    }
    let d0 = records.first()?.bregman_to_reference?;
    let sum: f64 = records.iter().map(|r| r.mu * r.residual_norm.powf(cfg.s)).sum();
    let bound = cfg.nu / ((cfg.nu - 1.0) * c1) * d0;
    Some(sum / bound)
}
