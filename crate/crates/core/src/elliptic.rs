//! Coefficient identification in `−Δu + cu = f` on the unit square with
//! Dirichlet data `u = g`, observing `u` in L².
//!
//! The square is split into `n × n` cells; `u` and `c` live on the `(n−1)²`
//! interior nodes (5-point Laplacian, boundary values lifted into the
//! right-hand side). All three PDE solves per linearization share the same
//! symmetric positive definite matrix and use Jacobi-preconditioned CG.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};
use crate::operators::{check_data, check_domain, power_iteration_norm, ForwardOperator};
use crate::spaces::{DataVector, DualVector, Grid, PrimalVector};

/// Coefficients below this value are raised to it for the PDE solve only.
pub const CLAMP_FLOOR: f64 = -0.5;

pub const DEFAULT_CG_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticGrid {
    n_cells: usize,
}

impl EllipticGrid {
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells < 3 {
            return Err(Error::param("n_cells", format!("need at least 3 cells per side, got {n_cells}")));
        }
        Ok(EllipticGrid { n_cells })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n_cells as f64
    }

    /// Interior nodes per side.
    pub fn interior(&self) -> usize {
        self.n_cells - 1
    }

    /// Grid of interior nodes with spacing `h` (cell-area quadrature).
    pub fn node_grid(&self) -> Grid {
        Grid::new(self.interior(), self.interior(), self.h()).expect("validated grid")
    }

    /// Coordinates of interior node `(row, col)`; rows run along y.
    pub fn coords(&self, row: usize, col: usize) -> (f64, f64) {
        ((col + 1) as f64 * self.h(), (row + 1) as f64 * self.h())
    }

    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> PrimalVector {
        PrimalVector::from_fn(self.node_grid(), |r, c| {
            let (x, y) = self.coords(r, c);
            f(x, y)
        })
    }

    /// Dirichlet lift: `g` at boundary neighbours, divided by `h²`.
    fn boundary_lift(&self, g: &dyn Fn(f64, f64) -> f64) -> Vec<f64> {
        let m = self.interior();
        let h = self.h();
        let inv_h2 = 1.0 / (h * h);
        let mut lift = vec![0.0; m * m];
        for r in 0..m {
            for c in 0..m {
                let (x, y) = self.coords(r, c);
                let mut acc = 0.0;
                if c == 0 {
                    acc += g(0.0, y);
                }
                if c + 1 == m {
                    acc += g(1.0, y);
                }
                if r == 0 {
                    acc += g(x, 0.0);
                }
                if r + 1 == m {
                    acc += g(x, 1.0);
                }
                lift[r * m + c] = acc * inv_h2;
            }
        }
        lift
    }
}

/// The piecewise-constant test coefficient: two inclusions on a zero background.
pub fn benchmark_coefficient(x: f64, y: f64) -> f64 {
    if (x - 0.65).powi(2) + (y - 0.36).powi(2) <= 0.18f64.powi(2) {
        1.0
    } else if (x - 0.35).powi(2) + 4.0 * (y - 0.75).powi(2) <= 0.2f64.powi(2) {
        0.5
    } else {
        0.0
    }
}

/// Problem data built around the exact state `u = x + y`.
#[derive(Debug, Clone)]
pub struct EllipticProblemData {
    pub grid: EllipticGrid,
    pub c_true: PrimalVector,
    /// Source term `f = c†·(x + y)`.
    pub f: PrimalVector,
}

impl EllipticProblemData {
    pub fn benchmark(grid: EllipticGrid) -> Self {
        let c_true = grid.sample(benchmark_coefficient);
        let f = grid.sample(|x, y| benchmark_coefficient(x, y) * (x + y));
        EllipticProblemData { grid, c_true, f }
    }

    pub fn exact_state_fn(x: f64, y: f64) -> f64 {
        x + y
    }

    /// `u(c†) = x + y` at the interior nodes, as a data vector.
    pub fn exact_data(&self) -> DataVector {
        let u = self.grid.sample(Self::exact_state_fn);
        DataVector::from_raw(u.into_vec(), self.grid.h().powi(2))
    }

    pub fn operator(&self) -> Result<EllipticOperator> {
        EllipticOperator::new(self.grid, &self.f, &Self::exact_state_fn)
    }
}

/// `(−Δ_h + diag(c)) v`
fn apply_system(m: usize, inv_h2: f64, c: &[f64], v: &[f64], out: &mut [f64]) {
    for r in 0..m {
        for col in 0..m {
            let i = r * m + col;
            let mut nb = 0.0;
            if col > 0 {
                nb += v[i - 1];
            }
            if col + 1 < m {
                nb += v[i + 1];
            }
            if r > 0 {
                nb += v[i - m];
            }
            if r + 1 < m {
                nb += v[i + m];
            }
            out[i] = (4.0 * v[i] - nb) * inv_h2 + c[i] * v[i];
        }
    }
}

/// Jacobi-preconditioned conjugate gradients; returns the solution and the iteration count.
fn solve_system(grid: &EllipticGrid, c: &[f64], b: &[f64], tol: f64) -> Result<(Vec<f64>, usize)> {
    let m = grid.interior();
    let n = m * m;
    let inv_h2 = 1.0 / grid.h().powi(2);
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok((x, 0));
    }
    let inv_diag: Vec<f64> = c.iter().map(|ci| 1.0 / (4.0 * inv_h2 + ci)).collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let max_iter = 10 * n;
    for it in 1..=max_iter {
        apply_system(m, inv_h2, c, &p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::LinearSolver {
                iterations: it,
                residual: f64::NAN,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let r_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r_norm <= tol * b_norm {
            return Ok((x, it));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let r_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    Err(Error::LinearSolver {
        iterations: max_iter,
        residual: r_norm / b_norm,
    })
}

#[derive(Debug, Clone)]
pub struct StateSolution {
    pub u: PrimalVector,
    pub cg_iterations: usize,
    /// Nodes whose coefficient was raised to [`CLAMP_FLOOR`].
    pub clamped: usize,
}

fn clamp_coefficient(c: &PrimalVector) -> (Vec<f64>, usize) {
    let mut clamped = 0;
    let v = c
        .as_slice()
        .iter()
        .map(|&ci| {
            if ci < CLAMP_FLOOR {
                clamped += 1;
                CLAMP_FLOOR
            } else {
                ci
            }
        })
        .collect();
    (v, clamped)
}

/// Solves `−Δ_h u + c u = f` with `u = g` on the boundary.
pub fn solve_state(
    c: &PrimalVector,
    grid: &EllipticGrid,
    f: &PrimalVector,
    g: &dyn Fn(f64, f64) -> f64,
    tol: f64,
) -> Result<StateSolution> {
    check_domain(grid.node_grid(), c)?;
    check_domain(grid.node_grid(), f)?;
    let (c_eff, clamped) = clamp_coefficient(c);
    let rhs: Vec<f64> = f.as_slice().iter().zip(grid.boundary_lift(g)).map(|(a, b)| a + b).collect();
    let (u, cg_iterations) = solve_system(grid, &c_eff, &rhs, tol)?;
    Ok(StateSolution {
        u: PrimalVector::from_raw(u, grid.node_grid()),
        cg_iterations,
        clamped,
    })
}

/// Nonzero entries `(i, j, a_ij)` of `−Δ_h + diag(c)`.
pub fn system_matrix_triplets(grid: &EllipticGrid, c: &PrimalVector) -> Vec<(usize, usize, f64)> {
    let m = grid.interior();
    let inv_h2 = 1.0 / grid.h().powi(2);
    let mut out = Vec::new();
    for r in 0..m {
        for col in 0..m {
            let i = r * m + col;
            out.push((i, i, 4.0 * inv_h2 + c.as_slice()[i]));
            if col > 0 {
                out.push((i, i - 1, -inv_h2));
            }
            if col + 1 < m {
                out.push((i, i + 1, -inv_h2));
            }
            if r > 0 {
                out.push((i, i - m, -inv_h2));
            }
            if r + 1 < m {
                out.push((i, i + m, -inv_h2));
            }
        }
    }
    out
}

/// `F(c) = u(c)` with derivative `h ↦ v` and adjoint `σ ↦ −u(c)·w`.
#[derive(Debug)]
pub struct EllipticOperator {
    grid: EllipticGrid,
    rhs: Vec<f64>,
    tol: f64,
    norm_bound: f64,
    clamped_total: AtomicUsize,
}

impl EllipticOperator {
    /// Builds the operator and probes `‖L(0)‖` by power iteration.
    pub fn new(grid: EllipticGrid, f: &PrimalVector, g: &dyn Fn(f64, f64) -> f64) -> Result<Self> {
        check_domain(grid.node_grid(), f)?;
        let rhs = f.as_slice().iter().zip(grid.boundary_lift(g)).map(|(a, b)| a + b).collect();
        let mut op = EllipticOperator {
            grid,
            rhs,
            tol: DEFAULT_CG_TOLERANCE,
            norm_bound: f64::INFINITY,
            clamped_total: AtomicUsize::new(0),
        };
        op.norm_bound = power_iteration_norm(&op, &PrimalVector::zeros(grid.node_grid()), 20)?;
        Ok(op)
    }

    /// Relative residual target of every CG solve.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_norm_bound(mut self, bound: f64) -> Self {
        self.norm_bound = bound;
        self
    }

    pub fn grid(&self) -> &EllipticGrid {
        &self.grid
    }

    /// Total number of clamped coefficient nodes seen across all solves.
    pub fn clamped_total(&self) -> usize {
        self.clamped_total.load(Ordering::Relaxed)
    }

    fn state(&self, c: &PrimalVector) -> Result<(Vec<f64>, Vec<f64>)> {
        check_domain(self.grid.node_grid(), c)?;
        if !c.is_finite() {
            return Err(Error::Domain("coefficient has non-finite entries".into()));
        }
        let (c_eff, clamped) = clamp_coefficient(c);
        if clamped > 0 {
            self.clamped_total.fetch_add(clamped, Ordering::Relaxed);
        }
        let (u, _) = solve_system(&self.grid, &c_eff, &self.rhs, self.tol)?;
        Ok((c_eff, u))
    }

    fn weight(&self) -> f64 {
        self.grid.h().powi(2)
    }

    fn adjoint_from_state(&self, c_eff: &[f64], u: &[f64], sigma: &DataVector) -> Result<DualVector> {
        let (w, _) = solve_system(&self.grid, c_eff, sigma.as_slice(), self.tol)?;
        let out = u.iter().zip(&w).map(|(a, b)| -a * b).collect();
        Ok(DualVector::from_raw(out, self.grid.node_grid()))
    }
}

impl ForwardOperator for EllipticOperator {
    fn domain(&self) -> Grid {
        self.grid.node_grid()
    }
    fn data_len(&self) -> usize {
        self.grid.node_grid().len()
    }
    fn data_weight(&self) -> f64 {
        self.weight()
    }
    fn apply(&self, c: &PrimalVector) -> Result<DataVector> {
        let (_, u) = self.state(c)?;
        Ok(DataVector::from_raw(u, self.weight()))
    }
    fn deriv_apply(&self, c: &PrimalVector, h: &PrimalVector) -> Result<DataVector> {
        check_domain(self.grid.node_grid(), h)?;
        let (c_eff, u) = self.state(c)?;
        let rhs: Vec<f64> = h.as_slice().iter().zip(&u).map(|(a, b)| -a * b).collect();
        let (v, _) = solve_system(&self.grid, &c_eff, &rhs, self.tol)?;
        Ok(DataVector::from_raw(v, self.weight()))
    }
    fn deriv_adjoint(&self, c: &PrimalVector, sigma: &DataVector) -> Result<DualVector> {
        check_data(self.data_len(), sigma)?;
        let (c_eff, u) = self.state(c)?;
        self.adjoint_from_state(&c_eff, &u, sigma)
    }
    fn is_linear(&self) -> bool {
        false
    }
    fn operator_norm_bound(&self) -> f64 {
        self.norm_bound
    }
    fn apply_with_adjoint(
        &self,
        c: &PrimalVector,
        weight_of: &mut dyn FnMut(&DataVector) -> Result<Option<DataVector>>,
    ) -> Result<(DataVector, Option<DualVector>)> {
        let (c_eff, u) = self.state(c)?;
        let fx = DataVector::from_raw(u, self.weight());
        let adj = match weight_of(&fx)? {
            Some(sigma) => {
                check_data(self.data_len(), &sigma)?;
                Some(self.adjoint_from_state(&c_eff, fx.as_slice(), &sigma)?)
            }
            None => None,
        };
        Ok((fx, adj))
    }
}
