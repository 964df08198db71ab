//! Adjoint and Fréchet-derivative checks for both forward operators.
//!
//! `cargo run --release --example operator_checks`

use tpg::operators::power_iteration_norm;
use tpg::prelude::*;

fn main() -> anyhow::Result<()> {
    let geom = ParallelBeamGeometry::new(32, 32, 20, 46)?;
    let ct = CtOperator::from_geometry(&geom)?;
    let phantom = shepp_logan(32, 32)?;
    println!("ct: adjoint defect {:.2e}", adjoint_test(&ct, &phantom, 10)?);
    println!(
        "ct: |A| ~ {:.3} (bound {:.3})",
        power_iteration_norm(&ct, &phantom, 50)?,
        ct.operator_norm_bound()
    );

    let grid = EllipticGrid::new(32)?;
    let data = EllipticProblemData::benchmark(grid);
    let op = data.operator()?;
    println!("elliptic: adjoint defect {:.2e}", adjoint_test(&op, &data.c_true, 5)?);
    let h = grid.sample(|x, y| (x - 0.5) * (y + 0.2));
    let report = frechet_test(&op, &data.c_true, &h)?;
    for (t, rem) in report.steps.iter().zip(&report.remainders) {
        println!("elliptic: t = {t:.0e}  remainder {rem:.3e}");
    }
    if let Some(slope) = report.slope {
        println!("elliptic: remainder slope {slope:.3} (2 expected)");
    }
    Ok(())
}
