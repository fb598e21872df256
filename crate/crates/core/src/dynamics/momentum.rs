use super::config::{SolverConfig, Viscosity};
use super::krylov::{pcg, CgTolerance};
use crate::error::{Error, Result};
use crate::fields::ops::face_shift;
use crate::fields::{tension, velocity_laplacian, DirectorField, Grid, Neighbor, ScalarField, VectorField};
use crate::state::FlowState;

/// Elastic body force `−λ(Δd·∇d)` on faces.
///
/// Each face uses the average tension `Δd + |∇d|²d` of its two cells dotted
/// with the director difference across it; the `|∇d|²d` part is orthogonal
/// to `∂d` for unit fields, so it only makes the discrete force pair exactly
/// with the director transport term in the energy balance.
pub fn elastic_force(d: &DirectorField, cfg: &SolverConfig) -> Result<VectorField> {
    d.ensure_unit(cfg.unit_tol)?;
    let g = d.grid;
    let tau = tension(d)?;
    let lambda = if cfg.flip_elastic_sign { -cfg.lambda } else { cfg.lambda };
    let mut out = VectorField::zeros(&g);
    for a in 0..g.dim() {
        let inv_h = 1.0 / g.spacing()[a];
        for ijk in g.face_indices(a) {
            if let (Neighbor::Cell(l), Neighbor::Cell(r)) = g.face_cells(a, ijk) {
                let (tl, tr) = (tau.values[l], tau.values[r]);
                let (dl, dr) = (d.values[l], d.values[r]);
                let mut s = 0.0;
                for k in 0..3 {
                    s += 0.5 * (tl[k] + tr[k]) * (dr[k] - dl[k]);
                }
                out.comps[a][g.face_index(a, ijk)] = -lambda * s * inv_h;
            }
        }
    }
    Ok(out)
}

/// Skew-symmetric centred advection `(u·∇)w` on MAC faces with transport
/// velocity `u`: face-to-face fluxes `U_e·w_nb/(2h)`, so `⟨A(u)w, w⟩ = 0`.
pub fn advection(u: &VectorField, w: &VectorField) -> VectorField {
    let g = u.grid;
    let mut out = VectorField::zeros(&g);
    for a in 0..g.dim() {
        for ijk in g.face_indices(a) {
            if g.is_wall_face(a, ijk) {
                continue;
            }
            let f = g.face_index(a, ijk);
            let (l, r) = match g.face_cells(a, ijk) {
                (Neighbor::Cell(l), Neighbor::Cell(r)) => (g.coords(l), g.coords(r)),
                _ => continue,
            };
            let mut s = 0.0;
            for b in 0..g.dim() {
                let half_inv_h = 0.5 / g.spacing()[b];
                let (u_plus, u_minus) = if b == a {
                    (None, None)
                } else {
                    (
                        Some(0.5 * (u.comps[b][g.high_face(b, l)] + u.comps[b][g.high_face(b, r)])),
                        Some(0.5 * (u.comps[b][g.low_face(b, l)] + u.comps[b][g.low_face(b, r)])),
                    )
                };
                if let Some(n) = face_shift(&g, a, ijk, b, true) {
                    let nf = g.face_index(a, n);
                    let ue = u_plus.unwrap_or_else(|| 0.5 * (u.comps[a][f] + u.comps[a][nf]));
                    s += half_inv_h * ue * w.comps[a][nf];
                }
                if let Some(n) = face_shift(&g, a, ijk, b, false) {
                    let nf = g.face_index(a, n);
                    let ue = u_minus.unwrap_or_else(|| 0.5 * (u.comps[a][f] + u.comps[a][nf]));
                    s -= half_inv_h * ue * w.comps[a][nf];
                }
            }
            out.comps[a][f] = s;
        }
    }
    out
}

/// `max(½(ρ_L+ρ_R), δ)` on every non-wall face (walls get 1, unused).
pub(crate) fn face_density(rho: &ScalarField, floor: f64) -> Result<VectorField> {
    let g = rho.grid;
    let mut out = VectorField::zeros(&g);
    let mut degenerate = 0usize;
    for a in 0..g.dim() {
        for ijk in g.face_indices(a) {
            let f = g.face_index(a, ijk);
            out.comps[a][f] = match g.face_cells(a, ijk) {
                (Neighbor::Cell(l), Neighbor::Cell(r)) => {
                    let v = (0.5 * (rho.values[l] + rho.values[r])).max(floor);
                    if !(v > 0.0) {
                        degenerate += 1;
                    }
                    v
                }
                _ => 1.0,
            };
        }
    }
    if degenerate > 0 {
        return Err(Error::VacuumDegeneracy { faces: degenerate });
    }
    Ok(out)
}

/// Explicit viscous limit `h²·ρ_min/(2·dim·ν)` of the predictor.
pub fn viscous_dt_limit(grid: &Grid, rho_min_eff: f64, nu: f64) -> f64 {
    let h = grid.min_spacing();
    h * h * rho_min_eff / (2.0 * grid.dim() as f64 * nu)
}

/// Predictor `u*` of the incremental projection, using `state.rho` (the
/// already-advanced density), `state.d` for the elastic force and the lagged
/// pressure `state.p`.
pub fn momentum_predict(state: &FlowState, cfg: &SolverConfig, dt: f64) -> Result<VectorField> {
    let force = elastic_force(&state.d, cfg)?;
    predict(&state.u, &state.rho, &state.p, &force, cfg, dt, None)
}

pub(crate) fn predict(
    u: &VectorField,
    rho: &ScalarField,
    p: &ScalarField,
    force: &VectorField,
    cfg: &SolverConfig,
    dt: f64,
    source: Option<&VectorField>,
) -> Result<VectorField> {
    let g = u.grid;
    u.ensure_finite("u")?;
    let rho_f = face_density(rho, cfg.rho_floor)?;
    let adv = advection(u, u);
    let gp = crate::fields::face_gradient(p)?;

    // body terms that are divided by ρ_f
    let mut body = force.clone();
    body.axpy(-1.0, &gp);
    if let Some(s) = source {
        body.axpy(1.0, s);
    }

    let mut out = VectorField::zeros(&g);
    match cfg.viscosity {
        Viscosity::Explicit => {
            let rho_min = min_interior(&rho_f);
            let limit = viscous_dt_limit(&g, rho_min, cfg.nu);
            if dt > limit * (1.0 + 1e-12) {
                return Err(Error::StepSize {
                    dt,
                    admissible: limit,
                    limit: "explicit viscous",
                });
            }
            let lap = velocity_laplacian(u)?;
            for a in 0..g.dim() {
                for ijk in g.face_indices(a) {
                    if g.is_wall_face(a, ijk) {
                        continue;
                    }
                    let f = g.face_index(a, ijk);
                    let rf = rho_f.comps[a][f];
                    out.comps[a][f] = u.comps[a][f]
                        + dt * (-adv.comps[a][f] + (cfg.nu * lap.comps[a][f] + body.comps[a][f]) / rf);
                }
            }
        }
        Viscosity::Implicit => {
            implicit_viscous(u, &rho_f, &adv, &body, cfg, dt, &mut out)?;
        }
    }
    out.zero_walls();
    if out.ensure_finite("u").is_err() {
        return Err(Error::BlowUp {
            field: "u".into(),
            reason: "momentum predictor produced non-finite values".into(),
        });
    }
    Ok(out)
}

fn min_interior(rho_f: &VectorField) -> f64 {
    let g = rho_f.grid;
    let mut m = f64::INFINITY;
    for a in 0..g.dim() {
        for ijk in g.face_indices(a) {
            if !g.is_wall_face(a, ijk) {
                m = m.min(rho_f.comps[a][g.face_index(a, ijk)]);
            }
        }
    }
    m
}

/// Backward-Euler viscous solve `(ρ_f/dt − νΔ)u* = ρ_f u/dt − ρ_f A(u) + body`.
fn implicit_viscous(
    u: &VectorField,
    rho_f: &VectorField,
    adv: &VectorField,
    body: &VectorField,
    cfg: &SolverConfig,
    dt: f64,
    out: &mut VectorField,
) -> Result<()> {
    let g = u.grid;
    // flatten non-wall faces
    let mut map = Vec::new();
    for a in 0..g.dim() {
        for ijk in g.face_indices(a) {
            if !g.is_wall_face(a, ijk) {
                map.push((a, g.face_index(a, ijk), ijk));
            }
        }
    }
    let n = map.len();
    let rhs: Vec<f64> = map
        .iter()
        .map(|&(a, f, _)| {
            let rf = rho_f.comps[a][f];
            rf * u.comps[a][f] / dt - rf * adv.comps[a][f] + body.comps[a][f]
        })
        .collect();
    let diag: Vec<f64> = map
        .iter()
        .map(|&(a, f, ijk)| {
            let mut s = rho_f.comps[a][f] / dt;
            for b in 0..g.dim() {
                let ih2 = 1.0 / (g.spacing()[b] * g.spacing()[b]);
                for plus in [false, true] {
                    s += cfg.nu
                        * ih2
                        * if face_shift(&g, a, ijk, b, plus).is_some() {
                            1.0
                        } else {
                            2.0
                        };
                }
            }
            s
        })
        .collect();
    let scatter = |x: &[f64]| {
        let mut v = VectorField::zeros(&g);
        for (i, &(a, f, _)) in map.iter().enumerate() {
            v.comps[a][f] = x[i];
        }
        v
    };
    let apply = |x: &[f64], y: &mut [f64]| {
        let v = scatter(x);
        let lap = velocity_laplacian(&v).expect("finite iterate");
        for (i, &(a, f, _)) in map.iter().enumerate() {
            y[i] = rho_f.comps[a][f] / dt * x[i] - cfg.nu * lap.comps[a][f];
        }
    };
    let mut x: Vec<f64> = map.iter().map(|&(a, f, _)| u.comps[a][f]).collect();
    let tol = CgTolerance {
        rel_tol: cfg.poisson_tol,
        abs_inf_tol: f64::INFINITY,
        cap: 10 * n.max(1),
    };
    pcg(
        "implicit viscous CG",
        apply,
        |r, z| {
            for i in 0..r.len() {
                z[i] = r[i] / diag[i];
            }
        },
        |_| {},
        &rhs,
        &mut x,
        &tol,
    )?;
    *out = scatter(&x);
    Ok(())
}
