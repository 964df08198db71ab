//! Builds the Shepp-Logan phantom, assembles the parallel-beam system matrix
//! and writes phantom and sinogram as 16-bit PGM images.
//!
//! `cargo run --release --example ct_phantom -- [size] [out-dir]`

use std::path::PathBuf;

use tpg::experiment::output::{pgm16, write_atomic};
use tpg::prelude::*;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let size: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(128);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "ct_phantom_out".into()));

    let geom = ParallelBeamGeometry::new(size, size, 60, (size as f64 * 1.43).ceil() as usize)?;
    let op = CtOperator::from_geometry(&geom)?;
    let (m, n) = op.matrix().dims();
    println!("system matrix {m} x {n}, {} nonzeros", op.matrix().nnz());

    let phantom = shepp_logan(size, size)?;
    let sino = op.apply(&phantom)?;
    let angles = geom.angles_deg.len();
    let sino_img = PrimalVector::from_vec(sino.into_vec(), Grid::pixels(angles, geom.rays_per_angle)?)?;

    std::fs::create_dir_all(&out)?;
    write_atomic(&out.join("phantom.pgm"), &pgm16(&phantom))?;
    write_atomic(&out.join("sinogram.pgm"), &pgm16(&sino_img))?;
    println!("wrote {}", out.display());
    Ok(())
}
