//! TOML experiment configuration.
//!
//! ```toml
//! problem = "ct"            # "ct" or "elliptic"
//! seed = 42
//! noise_level = 0.01        # relative for ct, absolute L² level for elliptic
//! output_dir = "out/ct"     # optional
//!
//! [ct]
//! size = 64                 # or `rows` and `cols`
//! angles = 30
//! rays = 95
//! matrix_cache = "ct64.csr" # optional
//!
//! [penalty]
//! beta = 1.0
//! tv_weight = 1.0
//! pdhg_iters = 100
//! tv_scaling = "continuum"  # or "pixel": TV differences per grid step
//!
//! [solver]
//! tau = 1.05
//! mu0_factor = 1.8          # μ̄₀ = factor·(1 − 1/τ)/β; or give `mu0_bar` directly
//! mu1_bar = 20000
//!
//! [[method]]
//! name = "landweber"
//! strategy = "zero"
//!
//! [[method]]
//! name = "tpg-dbts"
//! strategy = "dbts"
//! j_max = 1
//! alpha = 5
//! gamma0 = 0.1
//! gamma1 = 0.4
//! q_exponent = 1.1
//!
//! [method.penalty]          # optional per-method override
//! pdhg_iters = 200
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::dbts::DbtsConfig;
use crate::error::{Error, Result};
use crate::penalty::{PenaltyConfig, TvScaling};
use crate::solver::{LambdaStrategy, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Ct,
    Elliptic,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub noise_level: f64,
    pub output_dir: Option<PathBuf>,
    pub ct: Option<CtSection>,
    pub elliptic: Option<EllipticSection>,
    pub penalty: PenaltySection,
    pub solver: SolverSection,
    #[serde(default)]
    pub method: Vec<MethodSpec>,
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CtSection {
    pub size: Option<usize>,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub angles: usize,
    pub rays: usize,
    pub matrix_cache: Option<PathBuf>,
}

impl CtSection {
    pub fn image_size(&self) -> Option<(usize, usize)> {
        match (self.size, self.rows, self.cols) {
            (Some(s), None, None) => Some((s, s)),
            (None, Some(r), Some(c)) => Some((r, c)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipticSection {
    pub cells: usize,
    pub cg_tolerance: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltySection {
    pub beta: Option<f64>,
    pub tv_weight: Option<f64>,
    pub pdhg_iters: Option<usize>,
    pub pdhg_step_primal: Option<f64>,
    pub pdhg_step_dual: Option<f64>,
    pub tv_scaling: Option<TvScalingName>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TvScalingName {
    Continuum,
    Pixel,
}

impl From<TvScalingName> for TvScaling {
    fn from(v: TvScalingName) -> Self {
        match v {
            TvScalingName::Continuum => TvScaling::Continuum,
            TvScalingName::Pixel => TvScaling::Pixel,
        }
    }
}

impl PenaltySection {
    fn overlay(&self, over: &PenaltySection) -> PenaltySection {
        PenaltySection {
            beta: over.beta.or(self.beta),
            tv_weight: over.tv_weight.or(self.tv_weight),
            pdhg_iters: over.pdhg_iters.or(self.pdhg_iters),
            pdhg_step_primal: over.pdhg_step_primal.or(self.pdhg_step_primal),
            pdhg_step_dual: over.pdhg_step_dual.or(self.pdhg_step_dual),
            tv_scaling: over.tv_scaling.or(self.tv_scaling),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub tau: Option<f64>,
    pub mu0_bar: Option<f64>,
    pub mu0_factor: Option<f64>,
    pub mu1_bar: Option<f64>,
    pub s: Option<f64>,
    pub eta: Option<f64>,
    pub n_max: Option<usize>,
    pub nu: Option<f64>,
}

impl SolverSection {
    fn overlay(&self, over: &SolverSection) -> SolverSection {
        // an override of either μ̄₀ form replaces both
        let (mu0_bar, mu0_factor) = if over.mu0_bar.is_some() || over.mu0_factor.is_some() {
            (over.mu0_bar, over.mu0_factor)
        } else {
            (self.mu0_bar, self.mu0_factor)
        };
        SolverSection {
            tau: over.tau.or(self.tau),
            mu0_bar,
            mu0_factor,
            mu1_bar: over.mu1_bar.or(self.mu1_bar),
            s: over.s.or(self.s),
            eta: over.eta.or(self.eta),
            n_max: over.n_max.or(self.n_max),
            nu: over.nu.or(self.nu),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub name: String,
    pub strategy: String,
    pub alpha: Option<f64>,
    pub gamma0: Option<f64>,
    pub gamma1: Option<f64>,
    pub j_max: Option<usize>,
    pub q_exponent: Option<f64>,
    pub rho: Option<f64>,
    pub m_const: Option<f64>,
    pub penalty: Option<PenaltySection>,
    pub solver: Option<SolverSection>,
}

/// A method with fully resolved configs (δ is filled in once the data exist).
#[derive(Debug, Clone)]
pub struct ResolvedMethod {
    pub name: String,
    pub penalty: PenaltyConfig,
    pub solver: SolverConfig,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, &path.display().to_string())
    }

    /// Parses `text`; `origin` names the source in error messages.
    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let location = match e.span() {
                Some(span) => {
                    let (line, col) = line_col(text, span.start);
                    format!("{origin}:{line}:{col}")
                }
                None => origin.to_string(),
            };
            Error::Config {
                location,
                message: e.message().to_string(),
            }
        })?;
        cfg.validate(origin)?;
        Ok(cfg)
    }

    fn validate(&self, origin: &str) -> Result<()> {
        let err = |field: &str, message: String| Error::Config {
            location: format!("{origin}: {field}"),
            message,
        };
        if !(self.noise_level >= 0.0 && self.noise_level.is_finite()) {
            return Err(err("noise_level", format!("must be nonnegative, got {}", self.noise_level)));
        }
        match self.problem {
            ProblemKind::Ct => {
                let ct = self.ct.as_ref().ok_or_else(|| err("[ct]", "section required for problem = \"ct\"".into()))?;
                let (rows, cols) = ct
                    .image_size()
                    .ok_or_else(|| err("[ct].size", "give either `size` or both `rows` and `cols`".into()))?;
                if rows < 16 || cols < 16 {
                    return Err(err("[ct].size", format!("image must be at least 16x16, got {rows}x{cols}")));
                }
                if ct.angles == 0 || ct.rays == 0 {
                    return Err(err("[ct]", "`angles` and `rays` must be positive".into()));
                }
            }
            ProblemKind::Elliptic => {
                let el = self
                    .elliptic
                    .as_ref()
                    .ok_or_else(|| err("[elliptic]", "section required for problem = \"elliptic\"".into()))?;
                if el.cells < 3 {
                    return Err(err("[elliptic].cells", format!("need at least 3, got {}", el.cells)));
                }
            }
        }
        let mut seen = std::collections::HashSet::new();
        for (k, m) in self.method.iter().enumerate() {
            if !seen.insert(m.name.as_str()) {
                return Err(err(&format!("method[{k}].name"), format!("duplicate method name `{}`", m.name)));
            }
            if m.name.is_empty() || !m.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
                return Err(err(&format!("method[{k}].name"), format!("`{}` must be [A-Za-z0-9_-]+", m.name)));
            }
            self.resolve_method(m, 0.0)
                .map_err(|e| err(&format!("method[{k}] ({})", m.name), e.to_string()))?;
        }
        Ok(())
    }

    /// Resolves `spec` into concrete configs for noise level `delta`.
    pub fn resolve_method(&self, spec: &MethodSpec, delta: f64) -> Result<ResolvedMethod> {
        let p = match &spec.penalty {
            Some(o) => self.penalty.overlay(o),
            None => self.penalty.clone(),
        };
        let mut penalty = PenaltyConfig::new(
            p.beta.ok_or_else(|| Error::param("beta", "missing"))?,
            p.tv_weight.unwrap_or(1.0),
            p.pdhg_iters.unwrap_or(100),
        )?;
        if let Some(v) = p.pdhg_step_primal {
            penalty.pdhg_step_primal = v;
        }
        if let Some(v) = p.pdhg_step_dual {
            penalty.pdhg_step_dual = v;
        }
        if let Some(v) = p.tv_scaling {
            penalty.tv_scaling = v.into();
        }
        penalty.validate()?;

        let s = match &spec.solver {
            Some(o) => self.solver.overlay(o),
            None => self.solver.clone(),
        };
        let tau = s.tau.ok_or_else(|| Error::param("tau", "missing"))?;
        let mu0_bar = match (s.mu0_bar, s.mu0_factor) {
            (Some(v), None) => v,
            (None, Some(f)) => f * (1.0 - 1.0 / tau) / penalty.beta,
            _ => return Err(Error::param("mu0_bar", "give exactly one of `mu0_bar` and `mu0_factor`")),
        };
        let strategy = spec.strategy()?;
        let mut solver = SolverConfig::new(tau, mu0_bar, s.mu1_bar.unwrap_or(20000.0), delta, strategy)?;
        if let Some(v) = s.s {
            solver.s = v;
        }
        if let Some(v) = s.eta {
            solver.eta = v;
        }
        if let Some(v) = s.n_max {
            solver.n_max = v;
        }
        if let Some(v) = s.nu {
            solver.nu = v;
        }
        solver.validate()?;
        Ok(ResolvedMethod {
            name: spec.name.clone(),
            penalty,
            solver,
        })
    }
}

impl MethodSpec {
    pub fn strategy(&self) -> Result<LambdaStrategy> {
        let alpha = self.alpha.unwrap_or(5.0);
        let need = |v: Option<f64>, name: &'static str| v.ok_or_else(|| Error::param(name, "required by this strategy"));
        Ok(match self.strategy.as_str() {
            "zero" | "landweber" => LambdaStrategy::Zero,
            "nesterov" => LambdaStrategy::Nesterov { alpha },
            "delta-formula" => LambdaStrategy::DeltaFormula {
                gamma0: need(self.gamma0, "gamma0")?,
                alpha,
            },
            "delta-formula-root" => LambdaStrategy::DeltaFormulaRoot {
                m_const: need(self.m_const, "m_const")?,
                alpha,
            },
            "dbts" => LambdaStrategy::Dbts(DbtsConfig {
                j_max: self.j_max.unwrap_or(1),
                alpha,
                gamma0: need(self.gamma0, "gamma0")?,
                gamma1: need(self.gamma1, "gamma1")?,
                q_exponent: need(self.q_exponent, "q_exponent")?,
                rho: self.rho.unwrap_or(f64::INFINITY),
            }),
            other => {
                return Err(Error::param(
                    "strategy",
                    format!("unknown strategy `{other}` (zero, nesterov, delta-formula, delta-formula-root, dbts)"),
                ))
            }
        })
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}
