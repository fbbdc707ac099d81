//! Solidification of a liquid inside an elastic container.
//!
//! The unknowns are the absolute temperature `theta`, the volumetric strain
//! `U` and the liquid fraction `chi`. The temperature obeys a heat equation
//! with a Robin condition on the wall; strain and phase relax pointwise
//! under a viscous force balance coupled through the total volume increment
//! `U_Omega` to the wall stiffness, and a phase relaxation law constrained
//! to `chi ∈ [0,1]`.
//!
//! * [`model`]: parameters and constitutive formulas.
//! * [`grid`]: uniform grids, fields and the implicit diffusion solve.
//! * [`dynamics`]: the time stepper.
//! * [`equilibria`]: closed-form long-time states.
//! * [`diagnostics`]: energy, entropy and Lyapunov bookkeeping.

pub mod diagnostics;
pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod model;

pub use diagnostics::DiagnosticsRecord;
pub use dynamics::{Mode, RunOptions, SolverConfig, State, Trajectory};
pub use equilibria::{EquilibriumReport, Regime};
pub use error::{Error, Result};
pub use grid::{Field, Grid, RobinData};
pub use model::{BoundaryParams, DimensionlessGroups, HeatTransfer, MaterialParams};

/// Expand the wall heat-transfer description onto `grid`.
pub fn robin_data(grid: &Grid, b: &BoundaryParams) -> Result<RobinData> {
    match &b.h {
        HeatTransfer::Uniform(h) => Ok(RobinData::uniform(grid, *h, b.theta_gamma)),
        HeatTransfer::Values(v) => RobinData::from_values(grid, v, b.theta_gamma),
    }
}
