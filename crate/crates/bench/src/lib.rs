//! Fixed benchmark workloads shared by the criterion targets.

use std::f64::consts::PI;

use nematic_core::initial::{build, InitialKind, InitialSpec};
use nematic_core::{Boundary, FlowState, Grid, Result, SolverConfig, Viscosity};

/// Coupled periodic state: Taylor-Green flow carrying a perturbed circle map.
pub fn coupled_periodic(n: usize) -> Result<(FlowState, SolverConfig)> {
    let g = Grid::uniform(2, n, 2.0 * PI, Boundary::Periodic)?;
    let cfg = SolverConfig::default();
    let mut s = build(
        &InitialSpec {
            kind: InitialKind::TaylorGreen,
            amplitude: 0.5,
            ..Default::default()
        },
        &g,
        cfg.d_star,
    )?;
    s.d = build(
        &InitialSpec {
            kind: InitialKind::PerturbedCircle,
            seed: 11,
            ..Default::default()
        },
        &g,
        cfg.d_star,
    )?
    .d;
    Ok((s, cfg))
}

/// Vacuum bump in a closed box with implicit viscosity.
pub fn vacuum_box(n: usize) -> Result<(FlowState, SolverConfig)> {
    let g = Grid::uniform(2, n, 1.0, Boundary::DirichletBox)?;
    let cfg = SolverConfig {
        viscosity: Viscosity::Implicit,
        rho_floor: 1e-3,
        ..Default::default()
    };
    let s = build(
        &InitialSpec {
            kind: InitialKind::VacuumBump,
            amplitude: 0.3,
            ..Default::default()
        },
        &g,
        cfg.d_star,
    )?;
    Ok((s, cfg))
}
