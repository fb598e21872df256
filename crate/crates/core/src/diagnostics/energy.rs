use serde::{Deserialize, Serialize};

use crate::dynamics::SolverConfig;
use crate::error::Result;
use crate::fields::{
    compact_gradient_sq, director_dirichlet, director_laplacian, l2_norm_sq, neumaier_sum, velocity_dirichlet,
};
use crate::state::FlowState;

/// `(‖√ρu‖₂², ‖∇d‖₂²)`; the velocity is averaged to cell centres.
pub fn basic_energy(state: &FlowState) -> Result<(f64, f64)> {
    let kinetic = l2_norm_sq(&state.u, Some(&state.rho))?;
    Ok((kinetic, director_dirichlet(&state.d)))
}

/// The terms entering the basic energy balance at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyTerms {
    pub kinetic: f64,
    pub elastic: f64,
    /// `‖∇u‖₂²`
    pub dissipation_u: f64,
    /// `‖Δd‖₂²`
    pub dissipation_d: f64,
    /// `‖∇d‖₄⁴`
    pub quartic: f64,
}

impl EnergyTerms {
    pub fn of(state: &FlowState) -> Result<Self> {
        let (kinetic, elastic) = basic_energy(state)?;
        let lap = director_laplacian(&state.d)?;
        let dissipation_d = l2_norm_sq(&lap, None)?;
        let g = state.grid();
        let quartic = neumaier_sum(compact_gradient_sq(&state.d).iter().map(|s| s * s)) * g.cell_volume();
        Ok(Self {
            kinetic,
            elastic,
            dissipation_u: velocity_dirichlet(&state.u),
            dissipation_d,
            quartic,
        })
    }

    /// `kinetic + λ·elastic`, the dissipated energy.
    pub fn total(&self, lambda: f64) -> f64 {
        self.kinetic + lambda * self.elastic
    }
}

/// Residual of the basic energy identity between consecutive states,
/// `ΔE_b/dt + 2ν‖∇u‖² + 2λγ(‖Δd‖² − ‖∇d‖₄⁴)` with the rates averaged over
/// both ends of the step.
pub fn energy_identity_residual(prev: &FlowState, next: &FlowState, dt: f64, cfg: &SolverConfig) -> Result<f64> {
    let a = EnergyTerms::of(prev)?;
    let b = EnergyTerms::of(next)?;
    Ok(residual_from_terms(&a, &b, dt, cfg))
}

/// [`energy_identity_residual`] from precomputed terms of both ends.
pub fn residual_from_terms(a: &EnergyTerms, b: &EnergyTerms, dt: f64, cfg: &SolverConfig) -> f64 {
    let de = (b.total(cfg.lambda) - a.total(cfg.lambda)) / dt;
    let du = 0.5 * (a.dissipation_u + b.dissipation_u);
    let dd = 0.5 * (a.dissipation_d - a.quartic + b.dissipation_d - b.quartic);
    de + 2.0 * cfg.nu * du + 2.0 * cfg.lambda * cfg.gamma * dd
}
