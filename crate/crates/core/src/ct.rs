//! Discrete 2D parallel-beam tomography.
//!
//! The image occupies `rows × cols` unit pixels centred at the origin; row 0
//! is the top of the image. For a projection angle θ the rays travel along
//! `(cos θ, sin θ)` and are offset along the normal `(−sin θ, cos θ)`,
//! evenly spaced so that the outermost rays span the image diagonal. Matrix
//! entries are exact ray/pixel intersection lengths (Siddon's method).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::operators::{check_data, check_domain, power_iteration_norm, ForwardOperator};
use crate::spaces::{DataVector, DualVector, Grid, PrimalVector};

const CACHE_MAGIC: &[u8; 4] = b"CSR1";

#[derive(Debug, Clone, PartialEq)]
pub struct ParallelBeamGeometry {
    pub rows: usize,
    pub cols: usize,
    /// Projection angles in degrees.
    pub angles_deg: Vec<f64>,
    pub rays_per_angle: usize,
    /// Distance between neighbouring parallel rays.
    pub ray_spacing: f64,
}

impl ParallelBeamGeometry {
    /// `n_angles` angles `1°, 1° + 180°/n, …` and rays spanning the image diagonal.
    pub fn new(rows: usize, cols: usize, n_angles: usize, rays_per_angle: usize) -> Result<Self> {
        if n_angles == 0 {
            return Err(Error::param("n_angles", "must be positive"));
        }
        let step = 180.0 / n_angles as f64;
        let angles = (0..n_angles).map(|k| 1.0 + k as f64 * step).collect();
        Self::with_angles(rows, cols, angles, rays_per_angle)
    }

    pub fn with_angles(rows: usize, cols: usize, angles_deg: Vec<f64>, rays_per_angle: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::param("image_size", "must be nonempty"));
        }
        if rays_per_angle == 0 {
            return Err(Error::param("rays_per_angle", "must be positive"));
        }
        if angles_deg.is_empty() || angles_deg.iter().any(|a| !a.is_finite()) {
            return Err(Error::param("angles", "need at least one finite angle"));
        }
        let diagonal = ((rows * rows + cols * cols) as f64).sqrt();
        let ray_spacing = if rays_per_angle > 1 {
            diagonal / (rays_per_angle - 1) as f64
        } else {
            1.0
        };
        Ok(ParallelBeamGeometry {
            rows,
            cols,
            angles_deg,
            rays_per_angle,
            ray_spacing,
        })
    }

    pub fn n_rays(&self) -> usize {
        self.angles_deg.len() * self.rays_per_angle
    }

    pub fn n_pixels(&self) -> usize {
        self.rows * self.cols
    }

    /// Point on the ray through offset 0 and its unit direction, for ray `index`.
    pub fn ray(&self, index: usize) -> ([f64; 2], [f64; 2]) {
        let a = index / self.rays_per_angle;
        let k = index % self.rays_per_angle;
        let theta = self.angles_deg[a].to_radians();
        let (sin, cos) = theta.sin_cos();
        let offset = (k as f64 - (self.rays_per_angle as f64 - 1.0) / 2.0) * self.ray_spacing;
        ([-sin * offset, cos * offset], [cos, sin])
    }
}

/// Intersections of the line `origin + t·dir` (|dir| = 1) with the pixels of
/// a `rows × cols` unit grid centred at the origin, as `(pixel, length)`.
pub fn trace_ray(rows: usize, cols: usize, origin: [f64; 2], dir: [f64; 2]) -> Vec<(usize, f64)> {
    let (half_w, half_h) = (cols as f64 / 2.0, rows as f64 / 2.0);
    let mut t_lo = f64::NEG_INFINITY;
    let mut t_hi = f64::INFINITY;
    for (o, d, half) in [(origin[0], dir[0], half_w), (origin[1], dir[1], half_h)] {
        if d.abs() < 1e-15 {
            if o < -half || o > half {
                return Vec::new();
            }
        } else {
            let t1 = (-half - o) / d;
            let t2 = (half - o) / d;
            t_lo = t_lo.max(t1.min(t2));
            t_hi = t_hi.min(t1.max(t2));
        }
    }
    if !(t_hi > t_lo) {
        return Vec::new();
    }

    let mut ts = Vec::with_capacity(rows + cols + 2);
    ts.push(t_lo);
    ts.push(t_hi);
    for (o, d, count, half) in [(origin[0], dir[0], cols, half_w), (origin[1], dir[1], rows, half_h)] {
        if d.abs() < 1e-15 {
            continue;
        }
        for k in 0..=count {
            let t = (k as f64 - half - o) / d;
            if t > t_lo && t < t_hi {
                ts.push(t);
            }
        }
    }
    ts.sort_by(|a, b| a.partial_cmp(b).expect("finite crossing parameters"));

    let mut out = Vec::with_capacity(ts.len());
    for w in ts.windows(2) {
        let len = w[1] - w[0];
        if len <= 1e-12 {
            continue;
        }
        let tm = 0.5 * (w[0] + w[1]);
        let mx = origin[0] + tm * dir[0];
        let my = origin[1] + tm * dir[1];
        let col = ((mx + half_w).floor() as isize).clamp(0, cols as isize - 1) as usize;
        let row = ((half_h - my).floor() as isize).clamp(0, rows as isize - 1) as usize;
        out.push((row * cols + col, len));
    }
    out
}

/// Chord length of the line through the `rows × cols` image square (no pixel tracing).
pub fn chord_length(rows: usize, cols: usize, origin: [f64; 2], dir: [f64; 2]) -> f64 {
    let (half_w, half_h) = (cols as f64 / 2.0, rows as f64 / 2.0);
    let mut t_lo = f64::NEG_INFINITY;
    let mut t_hi = f64::INFINITY;
    for (o, d, half) in [(origin[0], dir[0], half_w), (origin[1], dir[1], half_h)] {
        if d.abs() < 1e-15 {
            if o.abs() > half {
                return 0.0;
            }
        } else {
            let (a, b) = ((-half - o) / d, (half - o) / d);
            t_lo = t_lo.max(a.min(b));
            t_hi = t_hi.min(a.max(b));
        }
    }
    (t_hi - t_lo).max(0.0)
}

/// Compressed sparse row matrix with `f64` values.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystemMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
}

impl SparseSystemMatrix {
    pub fn from_csr(nrows: usize, ncols: usize, row_ptr: Vec<usize>, col_idx: Vec<u32>, values: Vec<f64>) -> Result<Self> {
        if row_ptr.len() != nrows + 1 || row_ptr[0] != 0 {
            return Err(Error::Format("row pointer length or origin".into()));
        }
        if row_ptr.windows(2).any(|w| w[1] < w[0]) || row_ptr[nrows] != col_idx.len() || col_idx.len() != values.len() {
            return Err(Error::Format("inconsistent row pointers".into()));
        }
        if col_idx.iter().any(|&c| c as usize >= ncols) {
            return Err(Error::Format("column index out of range".into()));
        }
        Ok(SparseSystemMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .zip(&self.values[span])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate().take(self.nrows) {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k] as usize];
            }
            *o = acc;
        }
    }

    pub fn transpose(&self) -> SparseSystemMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            counts[c as usize + 1] += 1;
        }
        for i in 0..self.ncols {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0u32; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k] as usize;
                let slot = next[c];
                col_idx[slot] = r as u32;
                values[slot] = self.values[k];
                next[c] += 1;
            }
        }
        SparseSystemMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Writes the `CSR1` container: magic, little-endian `u64` rows, cols,
    /// nnz, then row pointers and column indices as `u64` and values as `f64`.
    pub fn write_cache(&self, path: &Path) -> Result<()> {
        let write = || -> std::io::Result<()> {
            let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
            let tmp = tempfile::NamedTempFile::new_in(dir)?;
            {
                let mut w = BufWriter::new(tmp.as_file());
                w.write_all(CACHE_MAGIC)?;
                for v in [self.nrows, self.ncols, self.nnz()] {
                    w.write_all(&(v as u64).to_le_bytes())?;
                }
                for &p in &self.row_ptr {
                    w.write_all(&(p as u64).to_le_bytes())?;
                }
                for &c in &self.col_idx {
                    w.write_all(&(c as u64).to_le_bytes())?;
                }
                for &v in &self.values {
                    w.write_all(&v.to_le_bytes())?;
                }
                w.flush()?;
            }
            tmp.persist(path).map_err(|e| e.error)?;
            Ok(())
        };
        write().map_err(|e| Error::io(path, e))
    }

    pub fn read_cache(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
        if &magic != CACHE_MAGIC {
            return Err(Error::Format(format!("bad magic {magic:?} in {}", path.display())));
        }
        let read_u64 = |r: &mut BufReader<File>| -> Result<u64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b).map_err(|e| Error::io(path, e))?;
            Ok(u64::from_le_bytes(b))
        };
        let nrows = read_u64(&mut r)? as usize;
        let ncols = read_u64(&mut r)? as usize;
        let nnz = read_u64(&mut r)? as usize;
        if ncols > u32::MAX as usize {
            return Err(Error::Format("column count exceeds u32".into()));
        }
        let row_ptr = (0..=nrows).map(|_| read_u64(&mut r).map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
        let col_idx = (0..nnz).map(|_| read_u64(&mut r).map(|v| v as u32)).collect::<Result<Vec<_>>>()?;
        let values = (0..nnz)
            .map(|_| read_u64(&mut r).map(f64::from_bits))
            .collect::<Result<Vec<_>>>()?;
        Self::from_csr(nrows, ncols, row_ptr, col_idx, values)
    }
}

/// Assembles the ray/pixel intersection matrix, one row per ray.
pub fn assemble_matrix(geom: &ParallelBeamGeometry) -> SparseSystemMatrix {
    let mut row_ptr = Vec::with_capacity(geom.n_rays() + 1);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    row_ptr.push(0);
    for ray in 0..geom.n_rays() {
        let (origin, dir) = geom.ray(ray);
        let mut hits = trace_ray(geom.rows, geom.cols, origin, dir);
        hits.sort_by_key(|h| h.0);
        for (pixel, len) in hits {
            col_idx.push(pixel as u32);
            values.push(len);
        }
        row_ptr.push(col_idx.len());
    }
    SparseSystemMatrix {
        nrows: geom.n_rays(),
        ncols: geom.n_pixels(),
        row_ptr,
        col_idx,
        values,
    }
}

/// Modified Shepp–Logan ellipses: intensity, semi-axes (x, y), centre, rotation in degrees.
const MODIFIED_SHEPP_LOGAN: [[f64; 6]; 10] = [
    [1.0, 0.69, 0.92, 0.0, 0.0, 0.0],
    [-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0],
    [-0.2, 0.11, 0.31, 0.22, 0.0, -18.0],
    [-0.2, 0.16, 0.41, -0.22, 0.0, 18.0],
    [0.1, 0.21, 0.25, 0.0, 0.35, 0.0],
    [0.1, 0.046, 0.046, 0.0, 0.1, 0.0],
    [0.1, 0.046, 0.046, 0.0, -0.1, 0.0],
    [0.1, 0.046, 0.023, -0.08, -0.605, 0.0],
    [0.1, 0.023, 0.023, 0.0, -0.606, 0.0],
    [0.1, 0.023, 0.046, 0.06, -0.605, 0.0],
];

/// Phantom intensity at `(x, y) ∈ [−1, 1]²`.
pub fn shepp_logan_value(x: f64, y: f64) -> f64 {
    MODIFIED_SHEPP_LOGAN
        .iter()
        .filter(|e| {
            let (sin, cos) = e[5].to_radians().sin_cos();
            let (dx, dy) = (x - e[3], y - e[4]);
            let u = (dx * cos + dy * sin) / e[1];
            let v = (-dx * sin + dy * cos) / e[2];
            u * u + v * v <= 1.0
        })
        .map(|e| (e[0] * 10.0).round() as i32)
        .sum::<i32>() as f64
        / 10.0
}

/// Modified Shepp–Logan phantom sampled at pixel centres on a unit-pixel grid.
pub fn shepp_logan(rows: usize, cols: usize) -> Result<PrimalVector> {
    if rows < 16 || cols < 16 {
        return Err(Error::param("image_size", format!("phantom needs at least 16x16, got {rows}x{cols}")));
    }
    let grid = Grid::pixels(rows, cols)?;
    Ok(PrimalVector::from_fn(grid, |r, c| {
        let x = -1.0 + (2 * c + 1) as f64 / cols as f64;
        let y = 1.0 - (2 * r + 1) as f64 / rows as f64;
        shepp_logan_value(x, y)
    }))
}

/// Linear CT forward operator `x ↦ A x` on unit-weight spaces.
#[derive(Debug, Clone)]
pub struct CtOperator {
    grid: Grid,
    matrix: SparseSystemMatrix,
    transpose: SparseSystemMatrix,
    norm_bound: f64,
}

impl CtOperator {
    /// Wraps `matrix` and estimates `‖A‖` with 50 power-iteration steps.
    pub fn new(matrix: SparseSystemMatrix, rows: usize, cols: usize) -> Result<Self> {
        let grid = Grid::pixels(rows, cols)?;
        if matrix.ncols != grid.len() {
            return Err(Error::Dimension {
                expected: grid.len(),
                found: matrix.ncols,
            });
        }
        let transpose = matrix.transpose();
        let mut op = CtOperator {
            grid,
            matrix,
            transpose,
            norm_bound: f64::INFINITY,
        };
        let est = power_iteration_norm(&op, &PrimalVector::zeros(grid), 50)?;
        op.norm_bound = est;
        Ok(op)
    }

    pub fn from_geometry(geom: &ParallelBeamGeometry) -> Result<Self> {
        Self::new(assemble_matrix(geom), geom.rows, geom.cols)
    }

    pub fn matrix(&self) -> &SparseSystemMatrix {
        &self.matrix
    }
}

impl ForwardOperator for CtOperator {
    fn domain(&self) -> Grid {
        self.grid
    }
    fn data_len(&self) -> usize {
        self.matrix.nrows
    }
    fn data_weight(&self) -> f64 {
        1.0
    }
    fn apply(&self, x: &PrimalVector) -> Result<DataVector> {
        check_domain(self.grid, x)?;
        let mut out = vec![0.0; self.matrix.nrows];
        self.matrix.matvec(x.as_slice(), &mut out);
        Ok(DataVector::from_raw(out, 1.0))
    }
    fn deriv_apply(&self, _x: &PrimalVector, h: &PrimalVector) -> Result<DataVector> {
        self.apply(h)
    }
    fn deriv_adjoint(&self, _x: &PrimalVector, w: &DataVector) -> Result<DualVector> {
        check_data(self.matrix.nrows, w)?;
        let mut out = vec![0.0; self.grid.len()];
        self.transpose.matvec(w.as_slice(), &mut out);
        Ok(DualVector::from_raw(out, self.grid))
    }
    fn is_linear(&self) -> bool {
        true
    }
    fn operator_norm_bound(&self) -> f64 {
        self.norm_bound
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::adjoint_test;

    #[test]
    fn horizontal_ray_through_middle_row() {
        let n = 7;
        let hits = trace_ray(n, n, [0.0, 0.0], [1.0, 0.0]);
        assert_eq!(hits.len(), n);
        for (k, (pixel, len)) in hits.iter().enumerate() {
            assert_eq!(*pixel, 3 * n + k);
            assert!((len - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_ray() {
        let n = 6;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let hits = trace_ray(n, n, [0.0, 0.0], [s, s]);
        assert_eq!(hits.len(), n);
        // bottom-left to top-right: anti-diagonal in row-major, top row first
        let mut pixels: Vec<usize> = hits.iter().map(|h| h.0).collect();
        pixels.sort();
        let expected: Vec<usize> = (0..n).map(|r| r * n + (n - 1 - r)).collect();
        assert_eq!(pixels, expected);
        for (_, len) in hits {
            assert!((len - 2f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn missing_ray_is_empty() {
        assert!(trace_ray(4, 4, [0.0, 3.0], [1.0, 0.0]).is_empty());
    }

    #[test]
    fn full_scale_geometry_dimensions() {
        let g = ParallelBeamGeometry::new(256, 256, 45, 367).unwrap();
        assert_eq!(g.n_rays(), 16515);
        assert_eq!(g.n_pixels(), 65536);
        assert_eq!(g.angles_deg[0], 1.0);
        assert_eq!(g.angles_deg[1], 5.0);
        assert_eq!(*g.angles_deg.last().unwrap(), 177.0);
    }

    #[test]
    fn row_sums_match_chords() {
        let geom = ParallelBeamGeometry::new(20, 16, 13, 31).unwrap();
        let m = assemble_matrix(&geom);
        assert_eq!(m.dims(), (13 * 31, 320));
        for r in 0..geom.n_rays() {
            let (o, d) = geom.ray(r);
            let sum: f64 = m.row(r).map(|(_, v)| v).sum();
            assert!((sum - chord_length(20, 16, o, d)).abs() < 1e-9, "ray {r}");
            assert!(m.row(r).all(|(_, v)| v >= 0.0));
            assert!(m.row(r).count() <= 2 * (20 + 16));
        }
    }

    #[test]
    fn transpose_roundtrip_and_adjoint() {
        let geom = ParallelBeamGeometry::new(16, 16, 8, 23).unwrap();
        let op = CtOperator::from_geometry(&geom).unwrap();
        assert_eq!(op.matrix().transpose().transpose(), *op.matrix());
        let x = PrimalVector::zeros(op.domain());
        assert!(adjoint_test(&op, &x, 10).unwrap() <= 1e-10);
        assert!(op.apply(&x).unwrap().as_slice().iter().all(|v| *v == 0.0));
        assert!(op.operator_norm_bound() > 0.0);
    }

    #[test]
    fn cache_roundtrip() {
        let geom = ParallelBeamGeometry::new(16, 16, 4, 9).unwrap();
        let m = assemble_matrix(&geom);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csr");
        m.write_cache(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"CSR1");
        assert_eq!(u64::from_le_bytes(bytes[4..12].try_into().unwrap()), 36);
        assert_eq!(SparseSystemMatrix::read_cache(&path).unwrap(), m);

        std::fs::write(&path, b"XXXX").unwrap();
        assert!(matches!(SparseSystemMatrix::read_cache(&path), Err(Error::Format(_))));
    }

    #[test]
    fn phantom_basics() {
        let p = shepp_logan(256, 256).unwrap();
        assert!(p.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
        let g = p.grid();
        for (r, c) in [(0, 0), (0, 255), (255, 0), (255, 255)] {
            assert_eq!(p.as_slice()[g.index(r, c)], 0.0);
        }
        assert!(shepp_logan(8, 8).is_err());
    }
}
