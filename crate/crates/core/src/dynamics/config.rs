use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{norm, Boundary, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DtPolicy {
    Fixed(f64),
    /// `dt = safety · min(stability limits)`, recomputed every step.
    Cfl { safety: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Viscosity {
    Explicit,
    /// Backward Euler viscous step solved by conjugate gradients.
    Implicit,
}

/// Physical constants, tolerances and numerical policy of the solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub nu: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub dt_policy: DtPolicy,
    /// `ρ_eff = max(ρ, rho_floor)` in the momentum equation.
    pub rho_floor: f64,
    pub unit_tol: f64,
    /// `None` selects 1e-10 on periodic grids and 1e-8 on boxes.
    pub div_tol: Option<f64>,
    pub poisson_tol: f64,
    pub d_star: Vec3,
    pub eps0: f64,
    pub blowup_cap: f64,
    pub viscosity: Viscosity,
    /// Reverses the elastic force. Mutation fixture for the invariant suite.
    #[serde(skip)]
    #[doc(hidden)]
    pub flip_elastic_sign: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            nu: 1.0,
            lambda: 1.0,
            gamma: 1.0,
            dt_policy: DtPolicy::Cfl { safety: 0.5 },
            rho_floor: 0.0,
            unit_tol: 1e-12,
            div_tol: None,
            poisson_tol: 1e-10,
            d_star: [0.0, 0.0, 1.0],
            eps0: 0.05,
            blowup_cap: 1e8,
            viscosity: Viscosity::Explicit,
            flip_elastic_sign: false,
        }
    }
}

impl SolverConfig {
    pub fn div_tol_for(&self, boundary: Boundary) -> f64 {
        self.div_tol.unwrap_or(match boundary {
            Boundary::Periodic => 1e-10,
            Boundary::DirichletBox => 1e-8,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("nu", self.nu),
            ("lambda", self.lambda),
            ("gamma", self.gamma),
            ("unit_tol", self.unit_tol),
            ("poisson_tol", self.poisson_tol),
            ("eps0", self.eps0),
            ("blowup_cap", self.blowup_cap),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be a positive number, got {v}")));
            }
        }
        if !(self.rho_floor.is_finite() && self.rho_floor >= 0.0) {
            return Err(Error::Config(format!("rho_floor must be >= 0, got {}", self.rho_floor)));
        }
        if let Some(t) = self.div_tol {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::Config(format!("div_tol must be positive, got {t}")));
            }
        }
        match self.dt_policy {
            DtPolicy::Fixed(dt) if !(dt.is_finite() && dt > 0.0) => {
                return Err(Error::Config(format!("fixed dt must be positive, got {dt}")));
            }
            DtPolicy::Cfl { safety } if !(safety > 0.0 && safety <= 1.0) => {
                return Err(Error::Config(format!("CFL safety must lie in (0, 1], got {safety}")));
            }
            _ => {}
        }
        let n = norm(&self.d_star);
        if !((n - 1.0).abs() <= 1e-14) {
            return Err(Error::Config(format!(
                "unit-norm contract: boundary director d_star must satisfy |d_star| = 1, got |d_star| = {n}"
            )));
        }
        Ok(())
    }
}
