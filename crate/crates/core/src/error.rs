use thiserror::Error;

/// Errors raised by the solver, the diagnostics and the configuration layer.
///
/// Every variant names the contract that was violated so that callers (the
/// CLI in particular) can report it verbatim.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite field: `{field}` contains NaN or infinite entries")]
    NonFinite { field: String },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("negative weight {value} at cell {index} violates the invariant rho >= 0")]
    NegativeWeight { index: usize, value: f64 },

    #[error("step size dt = {dt:e} violates the {limit} limit; admissible dt = {admissible:e}")]
    StepSize {
        dt: f64,
        admissible: f64,
        limit: &'static str,
    },

    #[error("internal scheme error: {0}")]
    InternalScheme(String),

    #[error(
        "vacuum degeneracy: effective density is 0 on {faces} face(s) with rho_floor = 0; \
         set a positive rho_floor"
    )]
    VacuumDegeneracy { faces: usize },

    #[error("blow-up in `{field}`: {reason}")]
    BlowUp { field: String, reason: String },

    #[error("unit-norm constraint violated: max ||d| - 1| = {violation:e} exceeds {tol:e}")]
    Constraint { violation: f64, tol: f64 },

    #[error("{solver} did not converge after {iterations} iterations (relative residual {residual:e})")]
    Convergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("incompatible Neumann data: net source {net:e} is not zero")]
    NeumannCompatibility { net: f64 },

    #[error("compatibility condition violated in {} vacuum cell(s) (first: {:?})", cells.len(), cells.first())]
    CompatibilityViolation { cells: Vec<usize> },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("determinism failure: {0}")]
    Determinism(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for the failures that mark the end of the discrete strong solution
    /// (non-finite values, capped sup-norms, director collapse).
    pub fn is_blowup(&self) -> bool {
        matches!(self, Error::BlowUp { .. } | Error::NonFinite { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
