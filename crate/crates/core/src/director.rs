//! Transported harmonic-map heat flow for the unit director.

use crate::dynamics::SolverConfig;
use crate::error::{Error, Result};
use crate::fields::ops::vec3_gradient;
use crate::fields::{
    director_laplacian, dot, tension, DirectorField, Grid, ScalarField, Vec3, Vec3Field, VectorField,
};
use crate::state::FlowState;
use crate::transport::advective_dt_limit;

/// Centred face-based transport `(u·∇)d`: on each axis the average of the
/// two one-sided differences weighted by their own face velocity.
pub fn transport_term(u: &VectorField, d: &DirectorField) -> Vec<Vec3> {
    let g = d.grid;
    let mut out = vec![[0.0; 3]; g.num_cells()];
    for ijk in g.cell_indices() {
        let c = g.index(ijk);
        let dc = d.values[c];
        let mut t = [0.0; 3];
        for a in 0..g.dim() {
            let half_inv_h = 0.5 / g.spacing()[a];
            let ulo = u.comps[a][g.low_face(a, ijk)];
            let uhi = u.comps[a][g.high_face(a, ijk)];
            if ulo != 0.0 {
                let dl = d.neighbor_value(c, a, false);
                for k in 0..3 {
                    t[k] += half_inv_h * ulo * (dc[k] - dl[k]);
                }
            }
            if uhi != 0.0 {
                let dh = d.neighbor_value(c, a, true);
                for k in 0..3 {
                    t[k] += half_inv_h * uhi * (dh[k] - dc[k]);
                }
            }
        }
        out[c] = t;
    }
    out
}

#[inline]
fn tangent(v: Vec3, d: &Vec3) -> Vec3 {
    let s = dot(&v, d);
    [v[0] - s * d[0], v[1] - s * d[1], v[2] - s * d[2]]
}

/// `γ(Δd + |∇d|²d) − (u·∇)d`, projected onto the tangent plane of each `d`.
pub fn director_rhs(state: &FlowState, cfg: &SolverConfig) -> Result<Vec3Field> {
    rhs_with_source(&state.d, &state.u, cfg, None)
}

fn rhs_with_source(d: &DirectorField, u: &VectorField, cfg: &SolverConfig, source: Option<&[Vec3]>) -> Result<Vec3Field> {
    d.grid.check_same(&u.grid, "director_rhs")?;
    u.ensure_finite("u")?;
    d.ensure_unit(cfg.unit_tol)?;
    let tau = tension(d)?;
    let tr = transport_term(u, d);
    let values = (0..d.values.len())
        .map(|i| {
            let mut v = [0.0; 3];
            for k in 0..3 {
                v[k] = cfg.gamma * tau.values[i][k] - tr[i][k];
                if let Some(s) = source {
                    v[k] += s[i][k];
                }
            }
            tangent(v, &d.values[i])
        })
        .collect();
    Ok(Vec3Field { grid: d.grid, values })
}

/// Explicit diffusion limit `h²/(4γ·dim)`.
pub fn director_dt_limit(grid: &Grid, gamma: f64) -> f64 {
    let h = grid.min_spacing();
    h * h / (4.0 * gamma * grid.dim() as f64)
}

/// Explicit step followed by pointwise renormalisation.
pub fn director_step(state: &FlowState, cfg: &SolverConfig, dt: f64) -> Result<DirectorField> {
    director_step_forced(&state.d, &state.u, cfg, dt, None)
}

/// [`director_step`] with an optional cell-centred source added to the rhs.
pub fn director_step_forced(
    d: &DirectorField,
    u: &VectorField,
    cfg: &SolverConfig,
    dt: f64,
    source: Option<&[Vec3]>,
) -> Result<DirectorField> {
    let limit = director_dt_limit(&d.grid, cfg.gamma);
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::StepSize {
            dt,
            admissible: limit,
            limit: "director diffusion",
        });
    }
    let adv = advective_dt_limit(u);
    if dt > adv * (1.0 + 1e-12) {
        return Err(Error::StepSize {
            dt,
            admissible: adv,
            limit: "advective CFL",
        });
    }
    let rhs = rhs_with_source(d, u, cfg, source)?;
    let mut values = d.values.clone();
    for (i, (dv, v)) in values.iter_mut().zip(&rhs.values).enumerate() {
        if *v == [0.0; 3] {
            continue;
        }
        let t = [dv[0] + dt * v[0], dv[1] + dt * v[1], dv[2] + dt * v[2]];
        let n = dot(&t, &t).sqrt();
        if !n.is_finite() {
            return Err(Error::NonFinite { field: "d".into() });
        }
        if n < 0.5 {
            return Err(Error::BlowUp {
                field: "d".into(),
                reason: format!("|d + dt·rhs| = {n:e} < 0.5 at cell {i}"),
            });
        }
        *dv = [t[0] / n, t[1] / n, t[2] / n];
    }
    DirectorField::from_values(&d.grid, values, d.boundary)
}

/// Pointwise `Δd·d + |∇d|²` with the centred (not compact) gradient density.
pub fn constraint_residual(d: &DirectorField) -> Result<ScalarField> {
    let lap = director_laplacian(d)?;
    let grad = vec3_gradient(&d.grid, &d.values);
    let values = (0..d.values.len())
        .map(|i| {
            let gsq: f64 = grad.iter().map(|ga| dot(&ga[i], &ga[i])).sum();
            dot(&lap.values[i], &d.values[i]) + gsq
        })
        .collect();
    Ok(ScalarField { grid: d.grid, values })
}

/// RMS of the tension `Δd + |∇d|²d` over boundary-adjacent cells and over
/// interior cells. On periodic grids the first entry is 0.
pub fn boundary_tension(d: &DirectorField) -> Result<(f64, f64)> {
    let g = d.grid;
    let tau = tension(d)?;
    let (mut sb, mut nb, mut si, mut ni) = (0.0, 0usize, 0.0, 0usize);
    for ijk in g.cell_indices() {
        let c = g.index(ijk);
        let t2 = dot(&tau.values[c], &tau.values[c]);
        let at_wall = !g.is_periodic() && (0..g.dim()).any(|a| ijk[a] == 0 || ijk[a] + 1 == g.cells()[a]);
        if at_wall {
            sb += t2;
            nb += 1;
        } else {
            si += t2;
            ni += 1;
        }
    }
    let rms = |s: f64, n: usize| if n == 0 { 0.0 } else { (s / n as f64).sqrt() };
    Ok((rms(sb, nb), rms(si, ni)))
}
