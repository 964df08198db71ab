//! Discretized primal, dual and data spaces.
//!
//! The solution space is a grid function space with cell-area quadrature, so
//! norms approximate the continuum L² norm. Dual elements are stored through
//! their Riesz representatives on the same grid, which makes the duality
//! pairing the weighted sum `h² Σ ξᵢ xᵢ` (plain Euclidean for unit cells).
//!
//! The data space is always Hilbertian; its duality mapping has the closed
//! form `J_s(r) = ‖r‖^{s-2} r`.

use std::fmt;
use std::marker::PhantomData;

use crate::error::{Error, Result};

/// Layout of a 2D grid function: `rows × cols` cells of side `spacing`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
    pub spacing: f64,
}

impl Grid {
    pub fn new(rows: usize, cols: usize, spacing: f64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::param("grid", format!("empty grid {rows}x{cols}")));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::param("spacing", format!("must be positive, got {spacing}")));
        }
        Ok(Grid {
            rows,
            cols,
            spacing,
        })
    }

    /// Unit-spacing grid, the algebraic (pixel) model.
    pub fn pixels(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, 1.0)
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight of one cell.
    pub fn cell_area(&self) -> f64 {
        self.spacing * self.spacing
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }
}

/// Marker for elements of the solution space X.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Primal;

/// Marker for elements of X*.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dual;

/// Grid function tagged with its role (primal or dual).
#[derive(Clone, PartialEq)]
pub struct GridVector<R> {
    data: Vec<f64>,
    grid: Grid,
    _role: PhantomData<R>,
}

pub type PrimalVector = GridVector<Primal>;
pub type DualVector = GridVector<Dual>;

impl<R> fmt::Debug for GridVector<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridVector")
            .field("grid", &self.grid)
            .field("norm", &self.norm())
            .finish()
    }
}

impl<R> GridVector<R> {
    pub fn zeros(grid: Grid) -> Self {
        Self::from_raw(vec![0.0; grid.len()], grid)
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self::from_raw(vec![value; grid.len()], grid)
    }

    /// Wraps `data`, rejecting wrong lengths and non-finite entries.
    pub fn from_vec(data: Vec<f64>, grid: Grid) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::Dimension {
                expected: grid.len(),
                found: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::param("data", format!("non-finite entry at index {i}")));
        }
        Ok(Self::from_raw(data, grid))
    }

    pub(crate) fn from_raw(data: Vec<f64>, grid: Grid) -> Self {
        debug_assert_eq!(data.len(), grid.len());
        GridVector {
            data,
            grid,
            _role: PhantomData,
        }
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for row in 0..grid.rows {
            for col in 0..grid.cols {
                data.push(f(row, col));
            }
        }
        Self::from_raw(data, grid)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn norm(&self) -> f64 {
        weighted_norm(&self.data, self.grid.cell_area())
    }

    /// Weighted inner product between two vectors of the same role.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        check_len(self.len(), other.len())?;
        Ok(self.grid.cell_area() * dot(&self.data, &other.data))
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        check_len(self.len(), other.len())?;
        let sq: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok((self.grid.cell_area() * sq).sqrt())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_raw(self.data.iter().map(|v| factor * v).collect(), self.grid)
    }

    /// `self + factor * other`
    pub fn add_scaled(&self, factor: f64, other: &Self) -> Result<Self> {
        check_len(self.len(), other.len())?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + factor * b)
            .collect();
        Ok(Self::from_raw(data, self.grid))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add_scaled(-1.0, other)
    }

    /// Reinterprets the coordinates under another role (Riesz identification).
    pub fn into_role<S>(self) -> GridVector<S> {
        GridVector::from_raw(self.data, self.grid)
    }
}

/// Element of the measurement space Y, with a uniform quadrature weight.
#[derive(Clone, PartialEq)]
pub struct DataVector {
    data: Vec<f64>,
    weight: f64,
}

impl fmt::Debug for DataVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DataVector")
            .field("len", &self.data.len())
            .field("weight", &self.weight)
            .field("norm", &self.norm())
            .finish()
    }
}

impl DataVector {
    pub fn from_vec(data: Vec<f64>, weight: f64) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::param("data", "empty data vector"));
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::param("weight", format!("must be positive, got {weight}")));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::param("data", format!("non-finite entry at index {i}")));
        }
        Ok(DataVector { data, weight })
    }

    /// Unit-weight (algebraic) data vector.
    pub fn euclidean(data: Vec<f64>) -> Result<Self> {
        Self::from_vec(data, 1.0)
    }

    pub(crate) fn from_raw(data: Vec<f64>, weight: f64) -> Self {
        DataVector { data, weight }
    }

    pub fn zeros(len: usize, weight: f64) -> Self {
        DataVector {
            data: vec![0.0; len],
            weight,
        }
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn norm(&self) -> f64 {
        weighted_norm(&self.data, self.weight)
    }

    pub fn inner(&self, other: &Self) -> Result<f64> {
        check_len(self.len(), other.len())?;
        Ok(self.weight * dot(&self.data, &other.data))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        DataVector::from_raw(self.data.iter().map(|v| factor * v).collect(), self.weight)
    }

    pub fn add_scaled(&self, factor: f64, other: &Self) -> Result<Self> {
        check_len(self.len(), other.len())?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + factor * b)
            .collect();
        Ok(DataVector::from_raw(data, self.weight))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add_scaled(-1.0, other)
    }
}

/// Duality pairing `⟨ξ, x⟩` of X* and X.
pub fn pairing(xi: &DualVector, x: &PrimalVector) -> Result<f64> {
    check_len(x.len(), xi.len())?;
    Ok(x.grid().cell_area() * dot(xi.as_slice(), x.as_slice()))
}

/// Duality mapping of the Hilbertian data space with gauge `t ↦ t^{s-1}`.
pub fn duality_map_s(r: &DataVector, s: f64) -> Result<DataVector> {
    if !(s > 1.0 && s.is_finite()) {
        return Err(Error::param("s", format!("duality exponent must exceed 1, got {s}")));
    }
    let norm = r.norm();
    if norm == 0.0 {
        return Ok(DataVector::zeros(r.len(), r.weight()));
    }
    if s == 2.0 {
        return Ok(r.clone());
    }
    Ok(r.scaled(norm.powf(s - 2.0)))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn weighted_norm(data: &[f64], weight: f64) -> f64 {
    (weight * data.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::Dimension { expected, found });
    }
    Ok(())
}
