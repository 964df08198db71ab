//! Config-driven method comparisons on the CT and elliptic test problems.
//!
//! Every run starts from `ξ₀ = 0` (so `x₀ = ∇Θ*(0) = 0`), uses noise drawn
//! from the seeded generator in [`noise`], and is fully determined by the
//! config and the seed.

pub mod config;
pub mod noise;
pub mod output;

use std::time::{Duration, Instant};

use log::info;

use crate::ct::{CtOperator, ParallelBeamGeometry, SparseSystemMatrix};
use crate::elliptic::{EllipticGrid, EllipticProblemData, DEFAULT_CG_TOLERANCE};
use crate::error::{Error, Result};
use crate::operators::ForwardOperator;
use crate::penalty::SubgradientPair;
use crate::solver::{monitor_monotonicity, monitor_tolerance, tpg_run, IterationRecord, Reference, StopReason};
use crate::spaces::{DataVector, DualVector, PrimalVector};

pub use config::{ExperimentConfig, MethodSpec, ProblemKind, ResolvedMethod};
pub use noise::add_noise;
pub use output::write_outputs;

/// A built test problem: operator, true solution and exact data.
pub struct ProblemInstance {
    pub operator: Box<dyn ForwardOperator>,
    pub truth: PrimalVector,
    pub exact_data: DataVector,
    /// CT reports relative errors, the elliptic problem absolute L² errors.
    pub relative_error: bool,
}

impl ProblemInstance {
    /// Absolute noise level for a configured level (relative for CT).
    pub fn absolute_delta(&self, configured: f64) -> f64 {
        if self.relative_error {
            configured * self.exact_data.norm()
        } else {
            configured
        }
    }
}

/// Loads the CT matrix from `cache` if it exists, otherwise assembles it.
pub fn ct_matrix(geom: &ParallelBeamGeometry, cache: Option<&std::path::Path>) -> Result<SparseSystemMatrix> {
    if let Some(path) = cache {
        if path.exists() {
            let m = SparseSystemMatrix::read_cache(path)?;
            if m.dims() != (geom.n_rays(), geom.n_pixels()) {
                return Err(Error::Format(format!(
                    "{} holds a {:?} matrix, geometry needs {:?}",
                    path.display(),
                    m.dims(),
                    (geom.n_rays(), geom.n_pixels())
                )));
            }
            return Ok(m);
        }
    }
    Ok(crate::ct::assemble_matrix(geom))
}

pub fn ct_geometry(cfg: &ExperimentConfig) -> Result<ParallelBeamGeometry> {
    let ct = cfg.ct.as_ref().ok_or_else(|| Error::Config {
        location: "[ct]".into(),
        message: "missing section".into(),
    })?;
    let (rows, cols) = ct.image_size().ok_or_else(|| Error::Config {
        location: "[ct].size".into(),
        message: "missing image size".into(),
    })?;
    ParallelBeamGeometry::new(rows, cols, ct.angles, ct.rays)
}

pub fn build_problem(cfg: &ExperimentConfig) -> Result<ProblemInstance> {
    match cfg.problem {
        ProblemKind::Ct => {
            let geom = ct_geometry(cfg)?;
            let cache = cfg.ct.as_ref().and_then(|c| c.matrix_cache.as_deref());
            let matrix = ct_matrix(&geom, cache)?;
            let operator = CtOperator::new(matrix, geom.rows, geom.cols)?;
            let truth = crate::ct::shepp_logan(geom.rows, geom.cols)?;
            let exact_data = operator.apply(&truth)?;
            Ok(ProblemInstance {
                operator: Box::new(operator),
                truth,
                exact_data,
                relative_error: true,
            })
        }
        ProblemKind::Elliptic => {
            let section = cfg.elliptic.as_ref().ok_or_else(|| Error::Config {
                location: "[elliptic]".into(),
                message: "missing section".into(),
            })?;
            let grid = EllipticGrid::new(section.cells)?;
            let data = EllipticProblemData::benchmark(grid);
            let operator = data
                .operator()?
                .with_tolerance(section.cg_tolerance.unwrap_or(DEFAULT_CG_TOLERANCE));
            Ok(ProblemInstance {
                operator: Box::new(operator),
                exact_data: data.exact_data(),
                truth: data.c_true,
                relative_error: false,
            })
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub method: String,
    pub strategy: &'static str,
    /// Configured noise level (relative for CT).
    pub noise_level: f64,
    /// Absolute noise level δ.
    pub delta: f64,
    pub n_delta: usize,
    pub stop_reason: StopReason,
    pub wall_time: Duration,
    pub final_error: f64,
    pub lambda_step_sum: f64,
    pub c1: f64,
    pub monotonicity_violations: usize,
    pub records: Vec<IterationRecord>,
    pub solution: PrimalVector,
}

/// Runs one resolved method on noisy data `y_delta`.
pub fn run_method(
    instance: &ProblemInstance,
    method: &ResolvedMethod,
    y_delta: &DataVector,
    noise_level: f64,
) -> Result<RunSummary> {
    let reference = Reference {
        solution: instance.truth.clone(),
        relative_error: instance.relative_error,
    };
    let start = SubgradientPair::from_dual(DualVector::zeros(instance.operator.domain()), &method.penalty);
    let clock = Instant::now();
    let outcome = tpg_run(
        instance.operator.as_ref(),
        y_delta,
        start,
        &method.penalty,
        &method.solver,
        Some(&reference),
    )?;
    let wall_time = clock.elapsed();
    let tol = monitor_tolerance(&instance.truth, &method.penalty);
    let violations = monitor_monotonicity(&outcome.records, tol).len();
    let final_error = reference.error_of(&outcome.solution)?;
    info!(
        "{}: n_delta = {}, error = {:.5}, {:.2?}",
        method.name,
        outcome.n_delta(),
        final_error,
        wall_time
    );
    Ok(RunSummary {
        method: method.name.clone(),
        strategy: method.solver.lambda_strategy.name(),
        noise_level,
        delta: method.solver.noise_level_delta,
        n_delta: outcome.n_delta(),
        stop_reason: outcome.stop_reason,
        wall_time,
        final_error,
        lambda_step_sum: outcome.lambda_step_sum(),
        c1: outcome.c1,
        monotonicity_violations: violations,
        records: outcome.records,
        solution: outcome.solution,
    })
}

/// Worker cap from `TPG_THREADS`, defaulting to the available parallelism.
pub fn worker_threads() -> usize {
    std::env::var("TPG_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs the configured methods (optionally only those named in `only`) on a
/// built instance. Methods run on up to [`worker_threads`] threads; results
/// keep the config order.
pub fn run_on_instance(cfg: &ExperimentConfig, instance: &ProblemInstance, only: Option<&[String]>) -> Result<Vec<RunSummary>> {
    let delta = instance.absolute_delta(cfg.noise_level);
    let (y_delta, _) = add_noise(&instance.exact_data, delta, cfg.seed)?;
    let methods = cfg
        .method
        .iter()
        .filter(|m| only.is_none_or(|names| names.iter().any(|n| n == &m.name)))
        .map(|m| cfg.resolve_method(m, delta))
        .collect::<Result<Vec<_>>>()?;

    let threads = worker_threads().min(methods.len()).max(1);
    let mut results: Vec<Option<Result<RunSummary>>> = (0..methods.len()).map(|_| None).collect();
    for (chunk_methods, chunk_results) in methods.chunks(threads).zip(results.chunks_mut(threads)) {
        std::thread::scope(|scope| {
            let handles: Vec<_> = chunk_methods
                .iter()
                .map(|m| scope.spawn(|| run_method(instance, m, &y_delta, cfg.noise_level)))
                .collect();
            for (slot, h) in chunk_results.iter_mut().zip(handles) {
                *slot = Some(h.join().expect("method worker panicked"));
            }
        });
    }
    results.into_iter().map(|r| r.expect("every method ran")).collect()
}

/// Builds the problem, runs every method, and writes outputs when the config
/// names an output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunSummary>> {
    let instance = build_problem(cfg)?;
    let summaries = run_on_instance(cfg, &instance, None)?;
    if let Some(dir) = &cfg.output_dir {
        write_outputs(&summaries, &instance, dir)?;
    }
    Ok(summaries)
}
