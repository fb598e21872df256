//! Conservative density transport.
//!
//! Fluxes are computed for the fluctuation `ρ - c̄` about the midpoint of the
//! current range. Uniform states therefore produce exactly zero fluxes, and
//! the update `ρ + Δ` leaves them untouched bitwise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{neumaier_sum, Grid, Neighbor, ScalarField, VectorField};

/// Bounds `lower ≤ ρ ≤ upper` seeded from the initial density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityBounds {
    pub lower: f64,
    pub upper: f64,
}

impl DensityBounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower >= 0.0 && lower <= upper && upper.is_finite()) {
            return Err(Error::Precondition(format!(
                "density bounds need 0 <= lower <= upper, got [{lower}, {upper}]"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn from_initial(rho0: &ScalarField) -> Result<Self> {
        rho0.ensure_finite("rho")?;
        Self::new(rho0.min(), rho0.max())
    }

    /// Largest excursion of `rho` outside the bounds (0 when inside).
    pub fn excursion(&self, rho: &ScalarField) -> f64 {
        let lo = (self.lower - rho.min()).max(0.0);
        let hi = (rho.max() - self.upper).max(0.0);
        lo.max(hi)
    }
}

/// Negative densities above this magnitude signal a scheme bug.
const ROUNDOFF_NEGATIVE: f64 = 1e-12;

/// Largest step allowed by `Σ_a max|u_a|·dt/h_a ≤ 0.5`.
pub fn advective_dt_limit(u: &VectorField) -> f64 {
    let g = u.grid;
    let rate: f64 = (0..g.dim()).map(|a| u.max_abs_component(a) / g.spacing()[a]).sum();
    if rate == 0.0 {
        f64::INFINITY
    } else {
        0.5 / rate
    }
}

#[inline]
fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

#[inline]
fn value(vals: &[f64], n: Neighbor, fallback: f64) -> f64 {
    match n {
        Neighbor::Cell(i) => vals[i],
        Neighbor::Ghost => fallback,
    }
}

/// One explicit finite-volume step of `ρ_t + div(ρu) = s`.
pub fn advect_density(rho: &ScalarField, u: &VectorField, dt: f64) -> Result<ScalarField> {
    advect_density_with_source(rho, u, dt, None)
}

/// As [`advect_density`], adding `dt·source` (cell-centred) to the update.
pub fn advect_density_with_source(
    rho: &ScalarField,
    u: &VectorField,
    dt: f64,
    source: Option<&[f64]>,
) -> Result<ScalarField> {
    let g: Grid = rho.grid;
    g.check_same(&u.grid, "advect_density")?;
    rho.ensure_finite("rho")?;
    u.ensure_finite("u")?;
    if !(dt.is_finite() && dt >= 0.0) {
        return Err(Error::Precondition(format!("dt must be nonnegative, got {dt}")));
    }
    let admissible = advective_dt_limit(u);
    if dt > admissible * (1.0 + 1e-12) {
        return Err(Error::StepSize {
            dt,
            admissible,
            limit: "advective CFL",
        });
    }
    if let Some(s) = source {
        if s.len() != g.num_cells() {
            return Err(Error::Shape("density source length mismatch".into()));
        }
    }

    let c_bar = 0.5 * (rho.min() + rho.max());
    let q: Vec<f64> = rho.values.iter().map(|r| r - c_bar).collect();
    let mut delta = vec![0.0; g.num_cells()];

    for a in 0..g.dim() {
        let ratio = dt / g.spacing()[a];
        for ijk in g.face_indices(a) {
            let w = u.comps[a][g.face_index(a, ijk)];
            if w == 0.0 {
                continue;
            }
            let (l, r) = match g.face_cells(a, ijk) {
                (Neighbor::Cell(l), Neighbor::Cell(r)) => (l, r),
                _ => continue,
            };
            // slope scaled by (1 - local Courant number): one-step MUSCL-Hancock
            let half = 0.5 * (1.0 - ratio * w.abs());
            let face_q = if w > 0.0 {
                let ll = value(&q, g.neighbor(l, a, false), q[l]);
                q[l] + half * minmod(q[l] - ll, q[r] - q[l])
            } else {
                let rr = value(&q, g.neighbor(r, a, true), q[r]);
                q[r] - half * minmod(q[r] - q[l], rr - q[r])
            };
            let flux = ratio * w * face_q;
            delta[l] -= flux;
            delta[r] += flux;
        }
    }
    if let Some(s) = source {
        for (d, s) in delta.iter_mut().zip(s) {
            *d += dt * s;
        }
    }

    let nonnegative = rho.min() >= 0.0;
    let mut values: Vec<f64> = rho.values.iter().zip(&delta).map(|(r, d)| r + d).collect();
    if source.is_none() && nonnegative {
        if let Some((i, &v)) = values.iter().enumerate().find(|(_, v)| **v < -ROUNDOFF_NEGATIVE) {
            return Err(Error::InternalScheme(format!(
                "density went negative ({v:e}) at cell {i} under a monotone flux"
            )));
        }
        // rounding in the flux sum can leave a vacuum cell a few ulps below 0
        for v in values.iter_mut().filter(|v| **v < 0.0) {
            *v = 0.0;
        }
    }
    let out = ScalarField { grid: g, values };
    out.ensure_finite("rho")?;
    Ok(out)
}

/// Total mass `Σ ρ·cellVolume` with compensated summation.
pub fn total_mass(rho: &ScalarField) -> f64 {
    neumaier_sum(rho.values.iter().copied()) * rho.grid.cell_volume()
}

/// Tracks `‖∇ρ(t)‖₂/‖∇ρ₀‖₂` against `exp(∫‖∇u‖_∞ dt)`, the transport
/// growth bound for density gradients. Monitored, not enforced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientGrowth {
    pub initial: f64,
    pub current: f64,
    pub integral_grad_u_inf: f64,
}

impl GradientGrowth {
    pub fn new(rho0: &ScalarField) -> Result<Self> {
        let initial = grad_l2(rho0)?;
        Ok(Self {
            initial,
            current: initial,
            integral_grad_u_inf: 0.0,
        })
    }

    pub fn update(&mut self, rho: &ScalarField, u: &VectorField, dt: f64) -> Result<()> {
        self.current = grad_l2(rho)?;
        self.integral_grad_u_inf += dt * max_velocity_gradient(u);
        Ok(())
    }

    /// Observed ratio; 1 when the initial gradient vanishes and stays zero.
    pub fn ratio(&self) -> f64 {
        if self.initial > 0.0 {
            self.current / self.initial
        } else if self.current == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    }

    pub fn bound(&self) -> f64 {
        self.integral_grad_u_inf.exp()
    }
}

fn grad_l2(f: &ScalarField) -> Result<f64> {
    let gr = crate::fields::gradient(f)?;
    crate::fields::l2_norm(gr.as_slice(), None)
}

/// `max |∂_b u_a|` over the MAC grid by one-sided face differences.
pub fn max_velocity_gradient(u: &VectorField) -> f64 {
    let g = u.grid;
    let mut m = 0.0f64;
    for a in 0..g.dim() {
        for ijk in g.face_indices(a) {
            let f = u.comps[a][g.face_index(a, ijk)];
            for b in 0..g.dim() {
                let v = match crate::fields::ops::face_shift(&g, a, ijk, b, true) {
                    Some(n) => u.comps[a][g.face_index(a, n)],
                    None if b != a => -f,
                    None => continue,
                };
                m = m.max((v - f).abs() / g.spacing()[b]);
            }
        }
    }
    m
}
