//! Two-point gradient (TPG) iterative regularization for ill-posed inverse
//! problems with a uniformly convex, non-smooth penalty
//! `Θ(x) = ‖x‖²/(2β) + |x|_TV`.
//!
//! The crate is organised bottom-up:
//!
//! - [`spaces`]: primal/dual/data vectors, pairings, the duality mapping `J_s`.
//! - [`penalty`]: `Θ`, Bregman distances, and `∇Θ*` via an inner PDHG solver.
//! - [`operators`]: the [`ForwardOperator`] contract and derivative checks.
//! - [`solver`]: the TPG iteration, step sizes, the discrepancy stop and monitors.
//! - [`dbts`]: discrete backtracking search for the combination parameter.
//! - [`ct`]: parallel-beam tomography (Siddon system matrix, Shepp–Logan phantom).
//! - [`elliptic`]: coefficient identification in `−Δu + cu = f`.
//! - [`experiment`]: config-driven method comparisons with CSV/PGM output.
//!
//! ```
//! use tpg::prelude::*;
//!
//! let grid = Grid::pixels(4, 4)?;
//! let op = DiagonalOperator::new(grid, vec![0.5; 16])?;
//! let truth = PrimalVector::constant(grid, 1.0);
//! let y = op.apply(&truth)?;
//! let penalty = PenaltyConfig::new(1.0, 1.0, 50)?;
//! let cfg = SolverConfig::new(1.05, 0.09, 100.0, 1e-3, LambdaStrategy::Nesterov { alpha: 5.0 })?;
//! let start = SubgradientPair::from_dual(DualVector::zeros(grid), &penalty);
//! let out = tpg_run(&op, &y, start, &penalty, &cfg, None)?;
//! assert_eq!(out.stop_reason, StopReason::Discrepancy);
//! # Ok::<(), tpg::Error>(())
//! ```

pub mod ct;
pub mod dbts;
pub mod elliptic;
mod error;
pub mod experiment;
pub mod operators;
pub mod penalty;
pub mod solver;
pub mod spaces;

pub use error::{Error, Result};
pub use operators::ForwardOperator;

pub mod prelude {
    pub use crate::ct::{shepp_logan, CtOperator, ParallelBeamGeometry};
    pub use crate::dbts::{DbtsBranch, DbtsConfig};
    pub use crate::elliptic::{EllipticGrid, EllipticOperator, EllipticProblemData};
    pub use crate::operators::{adjoint_test, frechet_test, DiagonalOperator, ForwardOperator, IdentityOperator};
    pub use crate::penalty::{bregman_distance, grad_theta_star, theta_value, PenaltyConfig, SubgradientPair};
    pub use crate::solver::{tpg_run, IterationRecord, LambdaStrategy, Reference, SolverConfig, StopReason, TpgOutcome};
    pub use crate::spaces::{duality_map_s, pairing, DataVector, DualVector, Grid, PrimalVector};
    pub use crate::{Error, Result};
}
