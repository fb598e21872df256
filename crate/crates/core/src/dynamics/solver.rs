use super::config::{DtPolicy, SolverConfig, Viscosity};
use super::momentum::{elastic_force, predict, viscous_dt_limit};
use super::projection::Projector;
use crate::director::{director_dt_limit, director_step_forced};
use crate::error::{Error, Result};
use crate::fields::{Grid, Vec3, VectorField};
use crate::state::FlowState;
use crate::transport::{advect_density_with_source, advective_dt_limit};

/// Source terms added to the three evolution equations, evaluated at the
/// start of each step. Used for manufactured solutions.
pub trait Forcing: Send + Sync {
    /// Cell-centred source of the continuity equation.
    fn density(&self, _grid: &Grid, _t: f64) -> Option<Vec<f64>> {
        None
    }
    /// Face-sampled body force added to `ρ(u_t + u·∇u) − νΔu + ∇p`.
    fn momentum(&self, _grid: &Grid, _t: f64) -> Option<VectorField> {
        None
    }
    /// Cell-centred source of the director equation.
    fn director(&self, _grid: &Grid, _t: f64) -> Option<Vec<Vec3>> {
        None
    }
}

/// Per-step report of the solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub dt: f64,
    pub poisson_iterations: usize,
    pub max_div: f64,
}

/// The most restrictive stability limit and its name.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtLimit {
    pub dt: f64,
    pub limit: &'static str,
}

pub struct Solver {
    cfg: SolverConfig,
    grid: Grid,
    projector: Projector,
    /// Previous pressure increment, the warm start of the next projection.
    last_phi: Option<Vec<f64>>,
    forcing: Option<Box<dyn Forcing>>,
}

impl std::fmt::Debug for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Solver")
            .field("cfg", &self.cfg)
            .field("grid", &self.grid)
            .field("forced", &self.forcing.is_some())
            .finish()
    }
}

impl Solver {
    pub fn new(cfg: SolverConfig, grid: &Grid) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            grid: *grid,
            projector: Projector::new(grid),
            last_phi: None,
            forcing: None,
        })
    }

    pub fn with_forcing(mut self, forcing: Box<dyn Forcing>) -> Self {
        self.forcing = Some(forcing);
        self
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Smallest of the advective, viscous (explicit only), director diffusion
    /// and centred-advection stability limits for `state`.
    pub fn admissible_dt(&self, state: &FlowState) -> Result<DtLimit> {
        let g = state.grid();
        let cfg = &self.cfg;
        let mut best = DtLimit {
            dt: advective_dt_limit(&state.u),
            limit: "advective CFL",
        };
        let mut consider = |dt: f64, limit: &'static str| {
            if dt < best.dt {
                best = DtLimit { dt, limit };
            }
        };
        consider(director_dt_limit(g, cfg.gamma), "director diffusion");
        let rho_min = state.rho.min().max(cfg.rho_floor);
        let rho_max = state.rho.max().max(cfg.rho_floor);
        if cfg.viscosity == Viscosity::Explicit {
            if !(rho_min > 0.0) {
                return Err(Error::VacuumDegeneracy { faces: 1 });
            }
            consider(viscous_dt_limit(g, rho_min, cfg.nu), "explicit viscous");
        }
        let centers = state.u.to_centers();
        let umax2 = centers.iter().fold(0.0f64, |m, v| m.max(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]));
        if umax2 > 0.0 {
            consider(cfg.gamma / umax2, "director advection-diffusion");
            if rho_max > 0.0 {
                consider(cfg.nu / (rho_max * umax2), "momentum advection-diffusion");
            }
        }
        Ok(best)
    }

    /// Step size chosen by the configured policy, clipped to `max_dt`.
    pub fn choose_dt(&self, state: &FlowState, max_dt: f64) -> Result<f64> {
        let dt = match self.cfg.dt_policy {
            DtPolicy::Fixed(dt) => dt,
            DtPolicy::Cfl { safety } => safety * self.admissible_dt(state)?.dt,
        };
        Ok(dt.min(max_dt))
    }

    /// Advance `state` by `dt`: density, director (old velocity), momentum
    /// with the new director, projection. On error `state` is unchanged.
    pub fn step(&mut self, state: &mut FlowState, dt: f64) -> Result<StepInfo> {
        let g = self.grid;
        g.check_same(state.grid(), "solver state")?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Precondition(format!("dt must be positive, got {dt}")));
        }
        let cfg = &self.cfg;
        let t = state.t;
        let (src_rho, src_u, src_d) = match &self.forcing {
            Some(f) => (f.density(&g, t), f.momentum(&g, t), f.director(&g, t)),
            None => (None, None, None),
        };

        let rho = advect_density_with_source(&state.rho, &state.u, dt, src_rho.as_deref())?;
        let d = director_step_forced(&state.d, &state.u, cfg, dt, src_d.as_deref())?;
        let force = elastic_force(&d, cfg)?;
        let u_star = predict(&state.u, &rho, &state.p, &force, cfg, dt, src_u.as_ref())?;
        let (u, phi, info) = self
            .projector
            .project_from(&u_star, &rho, cfg, dt, self.last_phi.as_deref())?;

        let mut p = state.p.clone();
        for (pv, f) in p.values.iter_mut().zip(&phi.values) {
            *pv += f;
        }
        p.remove_mean();

        self.last_phi = Some(phi.values);
        state.t = t + dt;
        state.rho = rho;
        state.d = d;
        state.u = u;
        state.p = p;
        Ok(StepInfo {
            dt,
            poisson_iterations: info.iterations,
            max_div: info.max_div,
        })
    }
}
