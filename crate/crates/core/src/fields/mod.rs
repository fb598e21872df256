//! Grids, staggered fields and discrete operators.

mod field;
mod grid;
mod norms;
pub mod ops;
mod snapshot;

pub use field::{dot, neumaier_sum, norm, sub, DirectorField, ScalarField, Vec3, Vec3Field, VectorField};
pub use grid::{Boundary, Grid, Neighbor};
pub use norms::{l2_norm, l2_norm_sq, lp_norm, CellSquares};
pub use ops::{
    compact_gradient_sq, director_dirichlet, director_gradient, director_laplacian, divergence, face_gradient,
    gradient, laplacian, tension, velocity_dirichlet, velocity_laplacian, ScalarClosure,
};
pub use snapshot::{FieldEntry, Snapshot, SnapshotHeader};
