#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tpg::penalty::{grad_theta_star_warm, ProxWarmStart};
use tpg::prelude::*;

/// Dense `m × n` matrix operator on a unit-spacing grid with Euclidean data.
pub struct DenseOperator {
    pub grid: Grid,
    pub rows: usize,
    pub a: Vec<f64>,
}

impl DenseOperator {
    pub fn random(grid: Grid, rows: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = (0..rows * grid.len()).map(|_| rng.random_range(0.0..1.0)).collect();
        DenseOperator { grid, rows, a }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        (0..self.rows)
            .map(|i| self.a[i * n..(i + 1) * n].iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn rmatvec(&self, w: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        let mut out = vec![0.0; n];
        for (i, wi) in w.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(&self.a[i * n..(i + 1) * n]) {
                *o += a * wi;
            }
        }
        out
    }
}

impl ForwardOperator for DenseOperator {
    fn domain(&self) -> Grid {
        self.grid
    }
    fn data_len(&self) -> usize {
        self.rows
    }
    fn data_weight(&self) -> f64 {
        1.0
    }
    fn apply(&self, x: &PrimalVector) -> tpg::Result<DataVector> {
        DataVector::euclidean(self.matvec(x.as_slice()))
    }
    fn deriv_apply(&self, _x: &PrimalVector, h: &PrimalVector) -> tpg::Result<DataVector> {
        self.apply(h)
    }
    fn deriv_adjoint(&self, _x: &PrimalVector, w: &DataVector) -> tpg::Result<DualVector> {
        DualVector::from_vec(self.rmatvec(w.as_slice()), self.grid)
    }
    fn is_linear(&self) -> bool {
        true
    }
    fn operator_norm_bound(&self) -> f64 {
        self.a.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Piecewise-constant 8×8 test image.
pub fn blocky_truth(grid: Grid) -> PrimalVector {
    PrimalVector::from_fn(grid, |r, c| {
        if (2..6).contains(&r) && (2..5).contains(&c) {
            1.0
        } else if r >= 6 && c >= 5 {
            0.5
        } else {
            0.0
        }
    })
}

pub struct SmallProblem {
    pub op: DenseOperator,
    pub truth: PrimalVector,
    pub y: DataVector,
}

/// Consistent 8×8 linear problem with 40 random measurements.
pub fn small_problem() -> SmallProblem {
    let grid = Grid::pixels(8, 8).unwrap();
    let op = DenseOperator::random(grid, 40, 7);
    let truth = blocky_truth(grid);
    let y = op.apply(&truth).unwrap();
    SmallProblem { op, truth, y }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Two-point gradient loop written directly on slices, with λₙ from `lambda`.
/// Returns the dual iterates ξ₀, ξ₁, …, ξ_iters.
pub fn reference_loop(
    p: &SmallProblem,
    penalty: &PenaltyConfig,
    mu0_bar: f64,
    mu1_bar: f64,
    iters: usize,
    lambda: impl Fn(usize) -> f64,
) -> Vec<Vec<f64>> {
    let grid = p.op.grid;
    let n = grid.len();
    let prox = |xi: &[f64], warm: &mut ProxWarmStart| {
        grad_theta_star_warm(&DualVector::from_vec(xi.to_vec(), grid).unwrap(), penalty, warm).into_vec()
    };
    let mut warm = ProxWarmStart::new();
    let mut xi_prev = vec![0.0; n];
    let mut xi = vec![0.0; n];
    // x₀ comes from a cold start, as in `SubgradientPair::from_dual`
    let mut x = prox(&xi, &mut ProxWarmStart::new());
    let mut out = vec![xi.clone()];
    for k in 0..iters {
        let l = if k == 0 { 0.0 } else { lambda(k) };
        let (zeta, z) = if l == 0.0 {
            (xi.clone(), x.clone())
        } else {
            let zeta: Vec<f64> = xi.iter().zip(&xi_prev).map(|(a, b)| a + l * (a - b)).collect();
            let z = prox(&zeta, &mut warm);
            (zeta, z)
        };
        let r: Vec<f64> = p.op.matvec(&z).iter().zip(p.y.as_slice()).map(|(a, b)| a - b).collect();
        let g = p.op.rmatvec(&r);
        let (rn, gn) = (norm(&r), norm(&g));
        let mu = (mu0_bar * (rn * rn) / (gn * gn)).min(mu1_bar);
        let next: Vec<f64> = zeta.iter().zip(&g).map(|(a, b)| a - mu * b).collect();
        xi_prev = std::mem::replace(&mut xi, next);
        x = prox(&xi, &mut warm);
        out.push(xi.clone());
    }
    out
}

/// Largest relative difference between two vector sequences.
pub fn max_relative_gap(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| {
            let d = norm(&u.iter().zip(v).map(|(x, y)| x - y).collect::<Vec<_>>());
            d / norm(u).max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max)
}

pub fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

pub fn config_path(name: &str) -> PathBuf {
    workspace_root().join("configs").join(name)
}
