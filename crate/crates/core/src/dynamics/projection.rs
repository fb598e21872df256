//! Variable-coefficient pressure projection.
//!
//! With `β = 1/ρ_eff` on faces the operator `A = −D β G` is symmetric
//! positive semidefinite with constants as its null space. Periodic grids
//! are preconditioned by an exact FFT inverse of `A` with mean `β`, which is
//! a direct solve when `β` is uniform; box grids use Jacobi-preconditioned
//! CG.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::config::SolverConfig;
use super::krylov::{max_abs, pcg, CgTolerance};
use super::momentum::face_density;
use crate::error::{Error, Result};
use crate::fields::ops::{divergence_into, face_gradient_values};
use crate::fields::{Grid, Neighbor, ScalarField, VectorField};

/// Spectral inverse of the periodic constant-coefficient operator.
pub struct SpectralPoisson {
    grid: Grid,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    /// Eigenvalues of `−L` (nonnegative, 0 for the mean mode).
    eig: Vec<f64>,
}

impl std::fmt::Debug for SpectralPoisson {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralPoisson").field("grid", &self.grid).finish()
    }
}

impl SpectralPoisson {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        let c = grid.cells();
        let dims = grid.dim();
        let forward = (0..dims).map(|a| planner.plan_fft_forward(c[a])).collect();
        let inverse = (0..dims).map(|a| planner.plan_fft_inverse(c[a])).collect();
        let mut eig = vec![0.0; grid.num_cells()];
        for ijk in grid.cell_indices() {
            let mut s = 0.0;
            for a in 0..dims {
                let h = grid.spacing()[a];
                let sn = (std::f64::consts::PI * ijk[a] as f64 / c[a] as f64).sin();
                s += 4.0 * sn * sn / (h * h);
            }
            eig[grid.index(ijk)] = s;
        }
        Self {
            grid: *grid,
            forward,
            inverse,
            eig,
        }
    }

    fn transform(&self, data: &mut [Complex<f64>], plans: &[Arc<dyn Fft<f64>>]) {
        let g = &self.grid;
        let c = g.cells();
        for (a, plan) in plans.iter().enumerate() {
            let n = c[a];
            let stride = g.stride(a);
            let mut line = vec![Complex::new(0.0, 0.0); n];
            let mut scratch = vec![Complex::new(0.0, 0.0); plan.get_inplace_scratch_len()];
            for start in 0..g.num_cells() {
                if (start / stride) % n != 0 {
                    continue;
                }
                for (k, l) in line.iter_mut().enumerate() {
                    *l = data[start + k * stride];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for (k, l) in line.iter().enumerate() {
                    data[start + k * stride] = *l;
                }
            }
        }
    }

    /// `z = (β·(−L))⁺ r`, mean-free.
    pub fn solve(&self, r: &[f64], beta: f64, z: &mut [f64]) {
        let mut data: Vec<Complex<f64>> = r.iter().map(|v| Complex::new(*v, 0.0)).collect();
        self.transform(&mut data, &self.forward);
        for (x, e) in data.iter_mut().zip(&self.eig) {
            *x = if *e == 0.0 { Complex::new(0.0, 0.0) } else { *x / (beta * e) };
        }
        self.transform(&mut data, &self.inverse);
        let scale = 1.0 / self.grid.num_cells() as f64;
        for (zi, x) in z.iter_mut().zip(&data) {
            *zi = x.re * scale;
        }
    }
}

/// Outcome of one projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionInfo {
    pub iterations: usize,
    pub relative_residual: f64,
    pub max_div: f64,
}

/// Reusable projection solver for one grid.
#[derive(Debug)]
pub struct Projector {
    grid: Grid,
    spectral: Option<SpectralPoisson>,
}

impl Projector {
    pub fn new(grid: &Grid) -> Self {
        Self {
            grid: *grid,
            spectral: grid.is_periodic().then(|| SpectralPoisson::new(grid)),
        }
    }

    pub fn iteration_cap(&self) -> usize {
        let g = &self.grid;
        let n = g.num_cells() as f64;
        (10.0 * n.powf(1.0 / g.dim() as f64).round() * g.dim() as f64) as usize
    }

    /// Project `u_star` onto discretely divergence-free fields. Returns the
    /// projected velocity and the mean-free increment `φ` that the caller
    /// accumulates into the pressure.
    pub fn project(
        &self,
        u_star: &VectorField,
        rho: &ScalarField,
        cfg: &SolverConfig,
        dt: f64,
    ) -> Result<(VectorField, ScalarField, ProjectionInfo)> {
        self.project_from(u_star, rho, cfg, dt, None)
    }

    /// [`Projector::project`] with an initial guess for `φ` (typically the
    /// previous increment).
    pub fn project_from(
        &self,
        u_star: &VectorField,
        rho: &ScalarField,
        cfg: &SolverConfig,
        dt: f64,
        guess: Option<&[f64]>,
    ) -> Result<(VectorField, ScalarField, ProjectionInfo)> {
        let g = self.grid;
        g.check_same(&u_star.grid, "pressure_project u")?;
        g.check_same(&rho.grid, "pressure_project rho")?;
        u_star.ensure_finite("u*")?;
        rho.ensure_finite("rho")?;
        if let Some((index, &value)) = rho.values.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(Error::NegativeWeight { index, value });
        }
        if !(dt > 0.0) {
            return Err(Error::Precondition(format!("projection needs dt > 0, got {dt}")));
        }
        let div_tol = cfg.div_tol_for(g.boundary());

        let mut b = vec![0.0; g.num_cells()];
        divergence_into(u_star, &mut b);
        b.iter_mut().for_each(|v| *v = -*v / dt);
        let net: f64 = b.iter().sum();
        // rounding scale of the telescoping sum Σ D u*
        let scale: f64 = (0..g.dim())
            .map(|a| u_star.comps[a].iter().map(|v| v.abs()).sum::<f64>() * 2.0 / g.spacing()[a])
            .sum::<f64>()
            / dt;
        if net.abs() > 1e-10 * scale {
            return Err(Error::NeumannCompatibility {
                net: net * g.cell_volume(),
            });
        }
        let mean = net / b.len() as f64;
        b.iter_mut().for_each(|v| *v -= mean);

        let zero = ScalarField::zeros(&g);
        if dt * max_abs(&b) <= 1e-3 * div_tol {
            let mut max_div = vec![0.0; g.num_cells()];
            divergence_into(u_star, &mut max_div);
            return Ok((
                u_star.clone(),
                zero,
                ProjectionInfo {
                    iterations: 0,
                    relative_residual: 0.0,
                    max_div: max_abs(&max_div),
                },
            ));
        }

        let rho_f = face_density(rho, cfg.rho_floor)?;
        let beta = beta_from(&rho_f);
        let apply = |x: &[f64], y: &mut [f64]| apply_operator(&g, &beta, x, y);
        let remove_mean = |v: &mut [f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter_mut().for_each(|x| *x -= m);
        };
        let tol = CgTolerance {
            rel_tol: cfg.poisson_tol,
            abs_inf_tol: 0.1 * div_tol / dt,
            cap: self.iteration_cap(),
        };
        let mut phi = match guess {
            Some(x) if x.len() == g.num_cells() => x.to_vec(),
            _ => vec![0.0; g.num_cells()],
        };
        let outcome = match &self.spectral {
            Some(sp) => {
                let bbar = mean_beta(&g, &beta);
                if guess.is_none() {
                    sp.solve(&b, bbar, &mut phi);
                }
                pcg(
                    "spectral-preconditioned CG",
                    apply,
                    |r, z| sp.solve(r, bbar, z),
                    remove_mean,
                    &b,
                    &mut phi,
                    &tol,
                )?
            }
            None => {
                let diag = jacobi_diagonal(&g, &beta);
                pcg(
                    "Jacobi-preconditioned CG",
                    apply,
                    |r, z| {
                        for i in 0..r.len() {
                            z[i] = r[i] / diag[i];
                        }
                    },
                    remove_mean,
                    &b,
                    &mut phi,
                    &tol,
                )?
            }
        };
        remove_mean(&mut phi);

        let gphi = face_gradient_values(&g, &phi);
        let mut u = u_star.clone();
        for a in 0..g.dim() {
            for (i, v) in u.comps[a].iter_mut().enumerate() {
                *v -= dt * beta.comps[a][i] * gphi.comps[a][i];
            }
        }
        u.zero_walls();
        let mut div = vec![0.0; g.num_cells()];
        divergence_into(&u, &mut div);
        let max_div = max_abs(&div);
        if !max_div.is_finite() {
            return Err(Error::NonFinite { field: "u".into() });
        }
        if max_div > div_tol {
            return Err(Error::Convergence {
                solver: "pressure projection",
                iterations: outcome.iterations,
                residual: max_div,
            });
        }
        Ok((
            u,
            ScalarField { grid: g, values: phi },
            ProjectionInfo {
                iterations: outcome.iterations,
                relative_residual: outcome.relative_residual,
                max_div,
            },
        ))
    }
}

/// One-shot projection; see [`Projector::project`].
pub fn pressure_project(
    u_star: &VectorField,
    rho: &ScalarField,
    cfg: &SolverConfig,
    dt: f64,
) -> Result<(VectorField, ScalarField)> {
    let (u, phi, _) = Projector::new(&u_star.grid).project(u_star, rho, cfg, dt)?;
    Ok((u, phi))
}

fn beta_from(rho_f: &VectorField) -> VectorField {
    let g = rho_f.grid;
    let mut beta = VectorField::zeros(&g);
    for a in 0..g.dim() {
        for ijk in g.face_indices(a) {
            let f = g.face_index(a, ijk);
            if !g.is_wall_face(a, ijk) {
                beta.comps[a][f] = 1.0 / rho_f.comps[a][f];
            }
        }
    }
    beta
}

fn mean_beta(g: &Grid, beta: &VectorField) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for a in 0..g.dim() {
        s += beta.comps[a].iter().sum::<f64>();
        n += beta.comps[a].len();
    }
    s / n as f64
}

/// `y = −D β G x`.
fn apply_operator(g: &Grid, beta: &VectorField, x: &[f64], y: &mut [f64]) {
    let mut q = face_gradient_values(g, x);
    for a in 0..g.dim() {
        for (v, b) in q.comps[a].iter_mut().zip(&beta.comps[a]) {
            *v *= b;
        }
    }
    divergence_into(&q, y);
    y.iter_mut().for_each(|v| *v = -*v);
}

fn jacobi_diagonal(g: &Grid, beta: &VectorField) -> Vec<f64> {
    let mut diag = vec![0.0; g.num_cells()];
    for a in 0..g.dim() {
        let ih2 = 1.0 / (g.spacing()[a] * g.spacing()[a]);
        for ijk in g.face_indices(a) {
            if let (Neighbor::Cell(l), Neighbor::Cell(r)) = g.face_cells(a, ijk) {
                let w = beta.comps[a][g.face_index(a, ijk)] * ih2;
                diag[l] += w;
                diag[r] += w;
            }
        }
    }
    diag
}
