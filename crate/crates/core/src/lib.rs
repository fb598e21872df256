//! Simulator for inhomogeneous incompressible nematic liquid crystal flow.

pub mod diagnostics;
pub mod director;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod initial;
pub mod parallel;
pub mod state;
pub mod transport;
pub mod verification;

pub use dynamics::{DtPolicy, Forcing, Solver, SolverConfig, Viscosity};
pub use error::{Error, Result};
pub use fields::{Boundary, DirectorField, Grid, ScalarField, Vec3, Vec3Field, VectorField};
pub use state::FlowState;
pub use transport::DensityBounds;
