//! Catalogue of initial data.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{norm, DirectorField, Grid, ScalarField, Vec3, VectorField};
use crate::state::FlowState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    /// `ρ ≡ ρ̄`, `u = 0`, `d ≡ d*`.
    Equilibrium,
    /// Harmonic circle map `d = (cos kx, sin kx, 0)` at rest. Periodic only.
    CircleMap,
    /// Circle map with a transverse and out-of-plane perturbation of size
    /// `amplitude`. Periodic only.
    PerturbedCircle,
    /// Taylor–Green vortex with constant director. Periodic only.
    TaylorGreen,
    /// Density with a vacuum disk, a vortex and a localised director twist.
    VacuumBump,
}

impl InitialKind {
    pub const ALL: [InitialKind; 5] = [
        InitialKind::Equilibrium,
        InitialKind::CircleMap,
        InitialKind::PerturbedCircle,
        InitialKind::TaylorGreen,
        InitialKind::VacuumBump,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InitialKind::Equilibrium => "equilibrium",
            InitialKind::CircleMap => "circle_map",
            InitialKind::PerturbedCircle => "perturbed_circle",
            InitialKind::TaylorGreen => "taylor_green",
            InitialKind::VacuumBump => "vacuum_bump",
        }
    }

    pub fn periodic_only(self) -> bool {
        matches!(
            self,
            InitialKind::CircleMap | InitialKind::PerturbedCircle | InitialKind::TaylorGreen
        )
    }
}

impl FromStr for InitialKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        InitialKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown initial kind `{s}`; expected one of equilibrium, circle_map, \
                     perturbed_circle, taylor_green, vacuum_bump"
                ))
            })
    }
}

/// Parameters selecting and scaling an entry of the catalogue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialSpec {
    pub kind: InitialKind,
    pub amplitude: f64,
    /// Upper density bound `ρ̄`.
    pub rho_bar: f64,
    /// Wavenumber of the circle maps.
    pub wavenumber: u32,
    /// 0 disables random phases.
    pub seed: u64,
}

impl Default for InitialSpec {
    fn default() -> Self {
        Self {
            kind: InitialKind::Equilibrium,
            amplitude: 1.0,
            rho_bar: 1.0,
            wavenumber: 1,
            seed: 0,
        }
    }
}

fn smoothstep(e0: f64, e1: f64, x: f64) -> f64 {
    let t = ((x - e0) / (e1 - e0)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Unit vector orthogonal to `d`.
fn orthogonal(d: &Vec3) -> Vec3 {
    let helper = if d[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let s = helper[0] * d[0] + helper[1] * d[1] + helper[2] * d[2];
    let v = [helper[0] - s * d[0], helper[1] - s * d[1], helper[2] - s * d[2]];
    let n = norm(&v);
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Build the initial state on `grid` with boundary director `d_star`.
pub fn build(spec: &InitialSpec, grid: &Grid, d_star: Vec3) -> Result<FlowState> {
    if spec.kind.periodic_only() && !grid.is_periodic() {
        return Err(Error::Config(format!(
            "initial kind `{}` requires a periodic grid",
            spec.kind.as_str()
        )));
    }
    if !(spec.rho_bar.is_finite() && spec.rho_bar > 0.0) {
        return Err(Error::Config(format!("rho_bar must be positive, got {}", spec.rho_bar)));
    }
    if !spec.amplitude.is_finite() {
        return Err(Error::Config("amplitude must be finite".into()));
    }
    let len = grid.length();
    let a = spec.amplitude;
    // angular coordinates 2πx/L
    let ang = move |x: [f64; 3], axis: usize| 2.0 * PI * x[axis] / len[axis];
    let k = spec.wavenumber as f64;
    let phase = if spec.seed == 0 {
        0.0
    } else {
        rand_chacha::ChaCha8Rng::seed_from_u64(spec.seed).gen_range(0.0..2.0 * PI)
    };

    let rho_const = ScalarField::constant(grid, spec.rho_bar);
    let zero_u = VectorField::zeros(grid);
    let zero_p = ScalarField::zeros(grid);

    let state = match spec.kind {
        InitialKind::Equilibrium => {
            FlowState::new(0.0, rho_const, zero_u, zero_p, DirectorField::constant(grid, d_star))?
        }
        InitialKind::CircleMap => {
            let d = DirectorField::from_fn_normalized(grid, d_star, |x| {
                let t = k * ang(x, 0);
                [t.cos(), t.sin(), 0.0]
            });
            FlowState::new(0.0, rho_const, zero_u, zero_p, d)?
        }
        InitialKind::PerturbedCircle => {
            let d = DirectorField::from_fn_normalized(grid, d_star, |x| {
                let t = k * ang(x, 0);
                [t.cos() + 0.1 * a * (ang(x, 1) + phase).cos(), t.sin(), 0.05 * a]
            });
            FlowState::new(0.0, rho_const, zero_u, zero_p, d)?
        }
        InitialKind::TaylorGreen => {
            let u = VectorField::from_fn(grid, |x| {
                let (sx, sy) = (ang(x, 0), ang(x, 1));
                [a * sx.sin() * sy.cos(), -a * sx.cos() * sy.sin(), 0.0]
            });
            let p = ScalarField::from_fn(grid, |x| {
                spec.rho_bar * a * a / 4.0 * ((2.0 * ang(x, 0)).cos() + (2.0 * ang(x, 1)).cos())
            });
            FlowState::new(0.0, rho_const, u, p, DirectorField::constant(grid, d_star))?
        }
        InitialKind::VacuumBump => vacuum_bump(spec, grid, d_star)?,
    };
    Ok(state)
}

fn vacuum_bump(spec: &InitialSpec, grid: &Grid, d_star: Vec3) -> Result<FlowState> {
    let len = grid.length();
    let dim = grid.dim();
    let lmin = (0..dim).map(|a| len[a]).fold(f64::INFINITY, f64::min);
    let rho = ScalarField::from_fn(grid, |x| {
        let r2: f64 = (0..dim).map(|a| (x[a] - 0.5 * len[a]).powi(2)).sum();
        spec.rho_bar * smoothstep(0.15 * lmin, 0.3 * lmin, r2.sqrt())
    });
    // bump profile vanishing (with its derivative) on the box walls
    let bump = move |x: [f64; 3]| -> f64 { (0..dim).map(|a| (PI * x[a] / len[a]).sin().powi(2)).product() };

    // stream function at (x, y) nodes, cell-centred in z: exactly solenoidal
    let h = grid.spacing();
    let amp = spec.amplitude * lmin / (2.0 * PI);
    let psi = |i: usize, j: usize, k: usize| -> f64 {
        let mut x = [i as f64 * h[0], j as f64 * h[1], 0.0];
        if dim == 3 {
            x[2] = (k as f64 + 0.5) * h[2];
        }
        amp * bump(x)
    };
    let mut u = VectorField::zeros(grid);
    for ijk in grid.face_indices(0) {
        let [i, j, k] = ijk;
        u.comps[0][grid.face_index(0, ijk)] = (psi(i, j + 1, k) - psi(i, j, k)) / h[1];
    }
    for ijk in grid.face_indices(1) {
        let [i, j, k] = ijk;
        u.comps[1][grid.face_index(1, ijk)] = -(psi(i + 1, j, k) - psi(i, j, k)) / h[0];
    }
    u.zero_walls();

    let e = orthogonal(&d_star);
    let theta_amp = spec.amplitude * PI / 2.0;
    let d = DirectorField::from_fn_normalized(grid, d_star, |x| {
        let th = theta_amp * bump(x);
        let (s, c) = th.sin_cos();
        [c * d_star[0] + s * e[0], c * d_star[1] + s * e[1], c * d_star[2] + s * e[2]]
    });
    FlowState::new(0.0, rho, u, ScalarField::zeros(grid), d)
}

/// `ρ₀ + 1/j`, the strictly positive approximation of vacuum data.
pub fn regularize_density(rho: &ScalarField, j: f64) -> Result<ScalarField> {
    if !(j > 0.0) {
        return Err(Error::Precondition(format!("regularisation index must be positive, got {j}")));
    }
    let inv = 1.0 / j;
    Ok(ScalarField {
        grid: rho.grid,
        values: rho.values.iter().map(|r| r + inv).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{divergence, Boundary};

    #[test]
    fn kinds_round_trip_through_names() {
        for k in InitialKind::ALL {
            assert_eq!(k.as_str().parse::<InitialKind>().unwrap(), k);
        }
        assert!("vortex".parse::<InitialKind>().is_err());
    }

    #[test]
    fn periodic_only_kinds_reject_boxes() {
        let g = Grid::uniform(2, 8, 1.0, Boundary::DirichletBox).unwrap();
        let spec = InitialSpec {
            kind: InitialKind::TaylorGreen,
            ..Default::default()
        };
        assert!(matches!(build(&spec, &g, [0.0, 0.0, 1.0]), Err(Error::Config(_))));
    }

    #[test]
    fn vacuum_bump_is_solenoidal_unit_and_touches_zero() {
        for (dim, b) in [(2, Boundary::DirichletBox), (2, Boundary::Periodic), (3, Boundary::DirichletBox)] {
            let g = Grid::uniform(dim, 16, 1.0, b).unwrap();
            let spec = InitialSpec {
                kind: InitialKind::VacuumBump,
                amplitude: 0.5,
                ..Default::default()
            };
            let s = build(&spec, &g, [0.0, 0.0, 1.0]).unwrap();
            s.validate().unwrap();
            assert!(divergence(&s.u).unwrap().max_abs() < 1e-12);
            assert!(s.d.max_unit_violation() < 1e-15);
            assert_eq!(s.rho.min(), 0.0);
            assert_eq!(s.rho.max(), 1.0);
            assert!(s.u.max_abs() > 0.0);
        }
    }

    #[test]
    fn zero_amplitude_bump_has_constant_director() {
        let g = Grid::uniform(2, 8, 1.0, Boundary::DirichletBox).unwrap();
        let spec = InitialSpec {
            kind: InitialKind::VacuumBump,
            amplitude: 0.0,
            ..Default::default()
        };
        let s = build(&spec, &g, [0.0, 1.0, 0.0]).unwrap();
        assert!(s.d.values.iter().all(|v| *v == [0.0, 1.0, 0.0]));
        assert_eq!(s.u.max_abs(), 0.0);
    }
}
