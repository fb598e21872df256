//! Momentum with elastic stress, pressure projection and the coupled step.

mod config;
mod krylov;
mod momentum;
mod projection;
mod solver;

pub use config::{DtPolicy, SolverConfig, Viscosity};
pub use momentum::{advection, elastic_force, momentum_predict, viscous_dt_limit};
pub use projection::{pressure_project, ProjectionInfo, Projector, SpectralPoisson};
pub use solver::{DtLimit, Forcing, Solver, StepInfo};
