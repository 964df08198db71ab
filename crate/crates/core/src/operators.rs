//! Forward operators `F : X → Y` with derivative `L(x)` and adjoint `L(x)*`,
//! plus dot-product and Taylor-remainder checks for them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::spaces::{DataVector, DualVector, Grid, PrimalVector};

pub trait ForwardOperator: Send + Sync {
    /// Grid of the solution space.
    fn domain(&self) -> Grid;

    /// Length of the data vector.
    fn data_len(&self) -> usize;

    /// Quadrature weight of the data space.
    fn data_weight(&self) -> f64;

    /// `F(x)`
    fn apply(&self, x: &PrimalVector) -> Result<DataVector>;

    /// `L(x) h`
    fn deriv_apply(&self, x: &PrimalVector, h: &PrimalVector) -> Result<DataVector>;

    /// `L(x)* w`
    fn deriv_adjoint(&self, x: &PrimalVector, w: &DataVector) -> Result<DualVector>;

    fn is_linear(&self) -> bool;

    /// Upper bound `C₀` on `‖L(x)‖`.
    fn operator_norm_bound(&self) -> f64;

    /// Evaluates `F(x)` and, if `weight_of` returns `Some(w)` for it,
    /// `L(x)* w` as well. Implementations may share work between the two.
    fn apply_with_adjoint(
        &self,
        x: &PrimalVector,
        weight_of: &mut dyn FnMut(&DataVector) -> Result<Option<DataVector>>,
    ) -> Result<(DataVector, Option<DualVector>)> {
        let fx = self.apply(x)?;
        let adj = match weight_of(&fx)? {
            Some(w) => Some(self.deriv_adjoint(x, &w)?),
            None => None,
        };
        Ok((fx, adj))
    }
}

/// Tangential cone constant η of the nonlinearity condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentialConeParams {
    pub eta: f64,
}

impl TangentialConeParams {
    pub fn new(eta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&eta) {
            return Err(Error::param("eta", format!("must lie in [0, 1), got {eta}")));
        }
        Ok(TangentialConeParams { eta })
    }

    /// Linear operators satisfy the cone condition with η = 0.
    pub fn for_operator(op: &dyn ForwardOperator, configured: f64) -> Result<Self> {
        if op.is_linear() {
            Ok(TangentialConeParams { eta: 0.0 })
        } else {
            Self::new(configured)
        }
    }
}

pub(crate) fn random_primal(grid: Grid, rng: &mut ChaCha8Rng) -> PrimalVector {
    PrimalVector::from_fn(grid, |_, _| StandardNormal.sample(rng))
}

pub(crate) fn random_data(len: usize, weight: f64, rng: &mut ChaCha8Rng) -> DataVector {
    DataVector::from_raw((0..len).map(|_| StandardNormal.sample(rng)).collect(), weight)
}

/// Dot-product test: max over `trials` random pairs of
/// `|⟨L h, w⟩ − ⟨h, L* w⟩| / (‖L h‖‖w‖ + ε)`.
pub fn adjoint_test(op: &dyn ForwardOperator, x: &PrimalVector, trials: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_ad10);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let h = random_primal(op.domain(), &mut rng);
        let w = random_data(op.data_len(), op.data_weight(), &mut rng);
        let lh = op.deriv_apply(x, &h)?;
        let ltw = op.deriv_adjoint(x, &w)?;
        let lhs = lh.inner(&w)?;
        let rhs = h.inner(&ltw.into_role())?;
        let defect = (lhs - rhs).abs() / (lh.norm() * w.norm() + f64::EPSILON);
        worst = worst.max(defect);
    }
    Ok(worst)
}

/// Taylor remainders `‖F(x+th) − F(x) − t L(x)h‖` and their log-log slope.
#[derive(Debug, Clone)]
pub struct FrechetReport {
    pub steps: Vec<f64>,
    pub remainders: Vec<f64>,
    /// Least-squares slope of `log remainder` against `log t`; `None` when
    /// every remainder vanishes to rounding level (linear operators).
    pub slope: Option<f64>,
}

impl FrechetReport {
    pub fn max_remainder(&self) -> f64 {
        self.remainders.iter().copied().fold(0.0, f64::max)
    }
}

pub const FRECHET_STEPS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

pub fn frechet_test(op: &dyn ForwardOperator, x: &PrimalVector, h: &PrimalVector) -> Result<FrechetReport> {
    let fx = op.apply(x)?;
    let lh = op.deriv_apply(x, h)?;
    let mut remainders = Vec::with_capacity(FRECHET_STEPS.len());
    for &t in &FRECHET_STEPS {
        let xt = x.add_scaled(t, h)?;
        if !xt.is_finite() {
            return Err(Error::Domain(format!("x + {t}·h is not finite")));
        }
        let rem = op.apply(&xt)?.sub(&fx)?.add_scaled(-t, &lh)?;
        remainders.push(rem.norm());
    }
    let scale = fx.norm().max(1.0);
    let slope = if remainders.iter().all(|r| *r <= 1e-12 * scale) {
        None
    } else {
        Some(log_log_slope(&FRECHET_STEPS, &remainders))
    };
    Ok(FrechetReport {
        steps: FRECHET_STEPS.to_vec(),
        remainders,
        slope,
    })
}

fn log_log_slope(ts: &[f64], rs: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .zip(rs)
        .filter(|(_, r)| **r > 0.0)
        .map(|(t, r)| (t.ln(), r.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Power iteration on `L(x)* L(x)`; returns an estimate of `‖L(x)‖`.
pub fn power_iteration_norm(op: &dyn ForwardOperator, x: &PrimalVector, steps: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0917);
    let mut v = random_primal(op.domain(), &mut rng);
    let mut estimate = 0.0;
    for _ in 0..steps {
        let nv = v.norm();
        if nv == 0.0 {
            return Ok(0.0);
        }
        v = v.scaled(1.0 / nv);
        let lv = op.deriv_apply(x, &v)?;
        estimate = lv.norm();
        v = op.deriv_adjoint(x, &lv)?.into_role();
    }
    Ok(estimate)
}

/// `F(x) = x` on a data space that mirrors the grid.
#[derive(Debug, Clone)]
pub struct IdentityOperator {
    grid: Grid,
}

impl IdentityOperator {
    pub fn new(grid: Grid) -> Self {
        IdentityOperator { grid }
    }
}

impl ForwardOperator for IdentityOperator {
    fn domain(&self) -> Grid {
        self.grid
    }
    fn data_len(&self) -> usize {
        self.grid.len()
    }
    fn data_weight(&self) -> f64 {
        self.grid.cell_area()
    }
    fn apply(&self, x: &PrimalVector) -> Result<DataVector> {
        check_domain(self.grid, x)?;
        Ok(DataVector::from_raw(x.as_slice().to_vec(), self.data_weight()))
    }
    fn deriv_apply(&self, _x: &PrimalVector, h: &PrimalVector) -> Result<DataVector> {
        self.apply(h)
    }
    fn deriv_adjoint(&self, _x: &PrimalVector, w: &DataVector) -> Result<DualVector> {
        check_data(self.data_len(), w)?;
        Ok(DualVector::from_raw(w.as_slice().to_vec(), self.grid))
    }
    fn is_linear(&self) -> bool {
        true
    }
    fn operator_norm_bound(&self) -> f64 {
        1.0
    }
}

/// `F(x) = diag(d) x`.
#[derive(Debug, Clone)]
pub struct DiagonalOperator {
    grid: Grid,
    diag: Vec<f64>,
}

impl DiagonalOperator {
    pub fn new(grid: Grid, diag: Vec<f64>) -> Result<Self> {
        if diag.len() != grid.len() {
            return Err(Error::Dimension {
                expected: grid.len(),
                found: diag.len(),
            });
        }
        Ok(DiagonalOperator { grid, diag })
    }
}

impl ForwardOperator for DiagonalOperator {
    fn domain(&self) -> Grid {
        self.grid
    }
    fn data_len(&self) -> usize {
        self.grid.len()
    }
    fn data_weight(&self) -> f64 {
        self.grid.cell_area()
    }
    fn apply(&self, x: &PrimalVector) -> Result<DataVector> {
        check_domain(self.grid, x)?;
        let data = x.as_slice().iter().zip(&self.diag).map(|(a, d)| a * d).collect();
        Ok(DataVector::from_raw(data, self.data_weight()))
    }
    fn deriv_apply(&self, _x: &PrimalVector, h: &PrimalVector) -> Result<DataVector> {
        self.apply(h)
    }
    fn deriv_adjoint(&self, _x: &PrimalVector, w: &DataVector) -> Result<DualVector> {
        check_data(self.data_len(), w)?;
        let data = w.as_slice().iter().zip(&self.diag).map(|(a, d)| a * d).collect();
        Ok(DualVector::from_raw(data, self.grid))
    }
    fn is_linear(&self) -> bool {
        true
    }
    fn operator_norm_bound(&self) -> f64 {
        self.diag.iter().fold(0.0, |m, d| m.max(d.abs()))
    }
}

pub(crate) fn check_domain(grid: Grid, x: &PrimalVector) -> Result<()> {
    if x.len() != grid.len() {
        return Err(Error::Dimension {
            expected: grid.len(),
            found: x.len(),
        });
    }
    Ok(())
}

pub(crate) fn check_data(len: usize, w: &DataVector) -> Result<()> {
    if w.len() != len {
        return Err(Error::Dimension {
            expected: len,
            found: w.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Pointwise square, `L(x)h = 2xh`.
    struct Square(Grid);

    impl ForwardOperator for Square {
        fn domain(&self) -> Grid {
            self.0
        }
        fn data_len(&self) -> usize {
            self.0.len()
        }
        fn data_weight(&self) -> f64 {
            self.0.cell_area()
        }
        fn apply(&self, x: &PrimalVector) -> Result<DataVector> {
            Ok(DataVector::from_raw(x.as_slice().iter().map(|v| v * v).collect(), self.data_weight()))
        }
        fn deriv_apply(&self, x: &PrimalVector, h: &PrimalVector) -> Result<DataVector> {
            let d = x.as_slice().iter().zip(h.as_slice()).map(|(a, b)| 2.0 * a * b).collect();
            Ok(DataVector::from_raw(d, self.data_weight()))
        }
        fn deriv_adjoint(&self, x: &PrimalVector, w: &DataVector) -> Result<DualVector> {
            let d = x.as_slice().iter().zip(w.as_slice()).map(|(a, b)| 2.0 * a * b).collect();
            Ok(DualVector::from_raw(d, self.0))
        }
        fn is_linear(&self) -> bool {
            false
        }
        fn operator_norm_bound(&self) -> f64 {
            f64::INFINITY
        }
    }

    #[test]
    fn identity_and_diagonal_are_self_adjoint() {
        let g = Grid::pixels(5, 4).unwrap();
        let x = PrimalVector::zeros(g);
        assert_eq!(adjoint_test(&IdentityOperator::new(g), &x, 5).unwrap(), 0.0);
        let d = DiagonalOperator::new(g, (0..20).map(|i| 0.3 * i as f64 - 2.0).collect()).unwrap();
        assert!(adjoint_test(&d, &x, 10).unwrap() <= 1e-14);
    }

    #[test]
    fn linear_frechet_is_exact() {
        let g = Grid::pixels(3, 3).unwrap();
        let d = DiagonalOperator::new(g, vec![1.5; 9]).unwrap();
        let x = PrimalVector::constant(g, 2.0);
        let h = PrimalVector::from_fn(g, |r, c| (r + 2 * c) as f64);
        let rep = frechet_test(&d, &x, &h).unwrap();
        assert!(rep.slope.is_none());
        assert!(rep.max_remainder() <= 1e-12);
    }

    #[test]
    fn square_has_quadratic_remainder() {
        let g = Grid::pixels(4, 4).unwrap();
        let x = PrimalVector::from_fn(g, |r, c| 1.0 + 0.1 * (r * 4 + c) as f64);
        let h = PrimalVector::from_fn(g, |r, c| ((r + c) % 3) as f64 - 1.0);
        let rep = frechet_test(&Square(g), &x, &h).unwrap();
        let slope = rep.slope.unwrap();
        assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
        // remainder is t²‖h²‖ exactly
        let h2 = h.as_slice().iter().map(|v| v.powi(4)).sum::<f64>().sqrt();
        for (t, r) in rep.steps.iter().zip(&rep.remainders) {
            assert!((r - t * t * h2).abs() <= 1e-9 * t * t * h2 + 1e-14);
        }
    }

    #[test]
    fn power_iteration_on_diagonal() {
        let g = Grid::pixels(2, 3).unwrap();
        let d = DiagonalOperator::new(g, vec![1.0, -4.0, 2.0, 0.5, 3.0, 1.0]).unwrap();
        let est = power_iteration_norm(&d, &PrimalVector::zeros(g), 50).unwrap();
        assert!((est - 4.0).abs() < 1e-6);
    }

    #[test]
    fn cone_params() {
        assert!(TangentialConeParams::new(1.0).is_err());
        assert!(TangentialConeParams::new(-0.1).is_err());
        let g = Grid::pixels(2, 2).unwrap();
        let p = TangentialConeParams::for_operator(&IdentityOperator::new(g), 0.5).unwrap();
        assert_eq!(p.eta, 0.0);
    }
}
