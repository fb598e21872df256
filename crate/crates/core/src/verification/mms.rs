//! Manufactured solutions on the periodic square `[0, 2π)²`.
//!
//! The exact fields are
//! `ρ = 1 + ½ sin(x − t) sin y`,
//! `u = e^{−t} (sin x cos y, −cos x sin y)`,
//! `d = (cos θ, sin θ, ε)/√(1 + ε²)` with `θ = x + t`,
//! and the effective pressure is zero. Sources are derived in closed form
//! here, independently of the solver stencils.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::{DtPolicy, Forcing, Solver, SolverConfig};
use crate::error::{Error, Result};
use crate::fields::{Boundary, DirectorField, Grid, ScalarField, Vec3, VectorField};
use crate::state::FlowState;

/// Final time of every refinement level.
pub const MMS_HORIZON: f64 = 0.1;
/// `dt = MMS_DT_COEFF · h²` unless a stability limit is tighter.
pub const MMS_DT_COEFF: f64 = 0.1;
/// Smallest acceptable pairwise order of any field.
pub const MMS_MIN_ORDER: f64 = 0.8;
/// Errors below this are treated as exact and carry no order.
const EXACT_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MmsCase {
    /// The forced smooth solution above.
    Manufactured,
    /// Rest state, constant director, no forcing.
    Equilibrium,
}

/// Closed-form fields and sources of the manufactured solution.
#[derive(Debug, Clone, Copy)]
pub struct ManufacturedSolution {
    pub eps: f64,
    pub nu: f64,
    pub lambda: f64,
    pub gamma: f64,
}

impl ManufacturedSolution {
    pub fn new(cfg: &SolverConfig) -> Self {
        Self {
            eps: 0.2,
            nu: cfg.nu,
            lambda: cfg.lambda,
            gamma: cfg.gamma,
        }
    }

    pub fn rho(&self, x: [f64; 3], t: f64) -> f64 {
        1.0 + 0.5 * (x[0] - t).sin() * x[1].sin()
    }

    fn rho_t(&self, x: [f64; 3], t: f64) -> f64 {
        -0.5 * (x[0] - t).cos() * x[1].sin()
    }

    fn rho_grad(&self, x: [f64; 3], t: f64) -> [f64; 2] {
        [0.5 * (x[0] - t).cos() * x[1].sin(), 0.5 * (x[0] - t).sin() * x[1].cos()]
    }

    pub fn u(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        let c = (-t).exp();
        [c * x[0].sin() * x[1].cos(), -c * x[0].cos() * x[1].sin(), 0.0]
    }

    fn theta(&self, x: [f64; 3], t: f64) -> f64 {
        x[0] + t
    }

    /// `(∇θ, Δθ, θ_t)`.
    fn theta_derivs(&self) -> ([f64; 2], f64, f64) {
        ([1.0, 0.0], 0.0, 1.0)
    }

    pub fn d(&self, x: [f64; 3], t: f64) -> Vec3 {
        let s = (1.0 + self.eps * self.eps).sqrt();
        let (sn, cs) = self.theta(x, t).sin_cos();
        [cs / s, sn / s, self.eps / s]
    }

    pub fn density_source(&self, x: [f64; 3], t: f64) -> f64 {
        let u = self.u(x, t);
        let g = self.rho_grad(x, t);
        self.rho_t(x, t) + u[0] * g[0] + u[1] * g[1]
    }

    /// `ρ(u_t + u·∇u) − νΔu + λ Σ_k Δd_k ∇d_k` (zero effective pressure).
    pub fn momentum_source(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        let c = (-t).exp();
        let u = self.u(x, t);
        let rho = self.rho(x, t);
        let conv = [0.5 * c * c * (2.0 * x[0]).sin(), 0.5 * c * c * (2.0 * x[1]).sin()];
        let s2 = 1.0 + self.eps * self.eps;
        let (gt, lt, _) = self.theta_derivs();
        let mut f = [0.0; 3];
        for a in 0..2 {
            // u_t = −u, Δu = −2u
            let elastic = lt * gt[a] / s2;
            f[a] = rho * (-u[a] + conv[a]) + 2.0 * self.nu * u[a] + self.lambda * elastic;
        }
        f
    }

    /// `d_t + (u·∇)d − γ(Δd + |∇d|²d)`.
    pub fn director_source(&self, x: [f64; 3], t: f64) -> Vec3 {
        let s = (1.0 + self.eps * self.eps).sqrt();
        let (gt, lt, tt) = self.theta_derivs();
        let (sn, cs) = self.theta(x, t).sin_cos();
        let tangent = [-sn, cs, 0.0];
        let radial = [cs, sn, 0.0];
        let u = self.u(x, t);
        let adv = u[0] * gt[0] + u[1] * gt[1];
        let g2 = gt[0] * gt[0] + gt[1] * gt[1];
        let d = self.d(x, t);
        let mut f = [0.0; 3];
        for k in 0..3 {
            let lap = (tangent[k] * lt - radial[k] * g2) / s;
            let tension = lap + g2 / (s * s) * d[k];
            f[k] = (tt + adv) * tangent[k] / s - self.gamma * tension;
        }
        f
    }

    pub fn state(&self, grid: &Grid, t: f64) -> Result<FlowState> {
        FlowState::new(
            t,
            ScalarField::from_fn(grid, |x| self.rho(x, t)),
            VectorField::from_fn(grid, |x| self.u(x, t)),
            ScalarField::zeros(grid),
            DirectorField::from_fn_normalized(grid, [0.0, 0.0, 1.0], |x| self.d(x, t)),
        )
    }
}

impl Forcing for ManufacturedSolution {
    fn density(&self, grid: &Grid, t: f64) -> Option<Vec<f64>> {
        Some(grid.cell_indices().map(|ijk| self.density_source(grid.center(ijk), t)).collect())
    }

    fn momentum(&self, grid: &Grid, t: f64) -> Option<VectorField> {
        Some(VectorField::from_fn(grid, |x| self.momentum_source(x, t)))
    }

    fn director(&self, grid: &Grid, t: f64) -> Option<Vec<Vec3>> {
        Some(grid.cell_indices().map(|ijk| self.director_source(grid.center(ijk), t)).collect())
    }
}

/// Errors of one refinement level at the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmsLevel {
    pub cells: usize,
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    pub err_rho: f64,
    pub err_u: f64,
    pub err_d: f64,
}

/// Observed orders between consecutive levels and by least squares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldOrders {
    pub pairwise: Vec<f64>,
    pub fitted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmsTable {
    pub case: MmsCase,
    pub levels: Vec<MmsLevel>,
    pub rho: FieldOrders,
    pub u: FieldOrders,
    pub d: FieldOrders,
}

impl MmsTable {
    /// Error if any field with nonzero errors has a pairwise order below
    /// [`MMS_MIN_ORDER`].
    pub fn check(&self) -> Result<()> {
        for (name, o) in [("rho", &self.rho), ("u", &self.u), ("d", &self.d)] {
            if let Some(bad) = o.pairwise.iter().find(|p| !p.is_nan() && **p < MMS_MIN_ORDER) {
                return Err(Error::Verification(format!(
                    "MMS order of {name} is {bad:.3} < {MMS_MIN_ORDER}"
                )));
            }
        }
        Ok(())
    }
}

fn orders(levels: &[MmsLevel], err: impl Fn(&MmsLevel) -> f64) -> FieldOrders {
    let exact = levels.iter().all(|l| err(l) < EXACT_FLOOR);
    if exact {
        return FieldOrders {
            pairwise: vec![f64::NAN; levels.len() - 1],
            fitted: f64::NAN,
        };
    }
    let pairwise = levels
        .windows(2)
        .map(|w| (err(&w[0]) / err(&w[1])).ln() / (w[0].h / w[1].h).ln())
        .collect();
    let xs: Vec<f64> = levels.iter().map(|l| l.h.ln()).collect();
    let ys: Vec<f64> = levels.iter().map(|l| err(l).ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    FieldOrders {
        pairwise,
        fitted: sxy / sxx,
    }
}

fn l2_cells(grid: &Grid, diff: impl Iterator<Item = f64>) -> f64 {
    (diff.map(|e| e * e).sum::<f64>() * grid.cell_volume()).sqrt()
}

fn run_level(cfg: &SolverConfig, n: usize, case: MmsCase) -> Result<MmsLevel> {
    let grid = Grid::uniform(2, n, 2.0 * PI, Boundary::Periodic)?;
    let h = grid.spacing()[0];
    let ms = ManufacturedSolution::new(cfg);
    // the manufactured density never drops below ½
    let limit = (MMS_DT_COEFF * h * h)
        .min(0.5 * h * h / (8.0 * cfg.gamma))
        .min(0.5 * h * h * 0.5 / (4.0 * cfg.nu));
    let steps = (MMS_HORIZON / limit).ceil() as usize;
    let dt = MMS_HORIZON / steps as f64;
    let run_cfg = SolverConfig {
        dt_policy: DtPolicy::Fixed(dt),
        ..cfg.clone()
    };
    let (mut state, solver) = match case {
        MmsCase::Manufactured => (
            ms.state(&grid, 0.0)?,
            Solver::new(run_cfg, &grid)?.with_forcing(Box::new(ms)),
        ),
        MmsCase::Equilibrium => (
            FlowState::new(
                0.0,
                ScalarField::constant(&grid, 1.0),
                VectorField::zeros(&grid),
                ScalarField::zeros(&grid),
                DirectorField::constant(&grid, cfg.d_star),
            )?,
            Solver::new(run_cfg, &grid)?,
        ),
    };
    let mut solver = solver;
    let initial = state.clone();
    for _ in 0..steps {
        solver.step(&mut state, dt)?;
    }
    let t = MMS_HORIZON;
    let exact = match case {
        MmsCase::Manufactured => ms.state(&grid, t)?,
        MmsCase::Equilibrium => initial,
    };
    let err_rho = l2_cells(&grid, state.rho.values.iter().zip(&exact.rho.values).map(|(a, b)| a - b));
    let err_u = l2_cells(
        &grid,
        state.u.comps.iter().flatten().zip(exact.u.comps.iter().flatten()).map(|(a, b)| a - b),
    );
    let err_d = l2_cells(
        &grid,
        state
            .d
            .values
            .iter()
            .zip(&exact.d.values)
            .map(|(a, b)| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()),
    );
    Ok(MmsLevel {
        cells: n,
        h,
        dt,
        steps,
        err_rho,
        err_u,
        err_d,
    })
}

/// Run every refinement level and fit the observed orders. Levels are run
/// sequentially; see [`mms_run_parallel`] for a threaded variant.
pub fn mms_run(cfg: &SolverConfig, refinements: &[usize], case: MmsCase) -> Result<MmsTable> {
    mms_run_parallel(cfg, refinements, case, 1)
}

/// [`mms_run`] with up to `threads` levels in flight; results are identical.
pub fn mms_run_parallel(cfg: &SolverConfig, refinements: &[usize], case: MmsCase, threads: usize) -> Result<MmsTable> {
    if refinements.len() < 3 {
        return Err(Error::Precondition(format!(
            "MMS needs at least 3 refinement levels, got {}",
            refinements.len()
        )));
    }
    if refinements.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition(format!(
            "MMS refinements must be strictly increasing, got {refinements:?}"
        )));
    }
    cfg.validate()?;
    let levels = crate::parallel::parallel_map(refinements, threads, |&n| run_level(cfg, n, case))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(MmsTable {
        case,
        rho: orders(&levels, |l| l.err_rho),
        u: orders(&levels, |l| l.err_u),
        d: orders(&levels, |l| l.err_d),
        levels,
    })
}
