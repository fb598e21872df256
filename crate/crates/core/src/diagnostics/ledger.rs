//! Running sups and time integrals of the a priori functionals.

use serde::{Deserialize, Serialize};

use super::energy::basic_energy;
use crate::error::{Error, Result};
use crate::fields::ops::vec3_gradient;
use crate::fields::{
    face_gradient, gradient, l2_norm_sq, neumaier_sum, velocity_dirichlet, velocity_laplacian,
    DirectorField, Grid, ScalarField, Vec3, VectorField,
};
use crate::state::FlowState;

/// `Σ_{a,b} ‖∂_a∂_b v‖²` by composing centred gradients.
pub fn hessian_sq(grid: &Grid, v: &[Vec3]) -> f64 {
    let mut total = 0.0;
    for ga in vec3_gradient(grid, v) {
        for gab in vec3_gradient(grid, &ga) {
            total += neumaier_sum(gab.iter().map(|w| w[0] * w[0] + w[1] * w[1] + w[2] * w[2]));
        }
    }
    total * grid.cell_volume()
}

/// `‖∇Δd‖²` (gradient composed with the Laplacian).
pub fn third_derivative_sq(d: &DirectorField) -> Result<f64> {
    let lap = crate::fields::director_laplacian(d)?;
    let g = d.grid;
    let mut total = 0.0;
    for ga in vec3_gradient(&g, &lap.values) {
        total += neumaier_sum(ga.iter().map(|w| w[0] * w[0] + w[1] * w[1] + w[2] * w[2]));
    }
    Ok(total * g.cell_volume())
}

/// Face sum `Σ|v_f|²·cellVolume` of a staggered field.
fn face_sq(v: &VectorField) -> f64 {
    neumaier_sum(v.comps.iter().flatten().map(|x| x * x)) * v.grid.cell_volume()
}

/// Norms of one state that need no time derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticNorms {
    pub kinetic: f64,
    pub elastic: f64,
    pub u_sq: f64,
    pub grad_u: f64,
    pub lap_d: f64,
    pub grad2_d: f64,
    pub grad2_u: f64,
    pub grad_p: f64,
    pub grad3_d: f64,
    pub grad_rho: f64,
}

impl StaticNorms {
    pub fn of(state: &FlowState) -> Result<Self> {
        let g = *state.grid();
        let (kinetic, elastic) = basic_energy(state)?;
        let lap_d = l2_norm_sq(&crate::fields::director_laplacian(&state.d)?, None)?;
        Ok(Self {
            kinetic,
            elastic,
            u_sq: l2_norm_sq(&state.u, None)?,
            grad_u: velocity_dirichlet(&state.u),
            lap_d,
            grad2_d: hessian_sq(&g, &state.d.values),
            grad2_u: face_sq(&velocity_laplacian(&state.u)?),
            grad_p: face_sq(&face_gradient(&state.p)?),
            grad3_d: third_derivative_sq(&state.d)?,
            grad_rho: l2_norm_sq(gradient(&state.rho)?.as_slice(), None)?,
        })
    }
}

/// Norms built from backward differences of stored snapshots.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RateNorms {
    /// `‖√ρ u_t‖²`
    pub rho_u_t: Option<f64>,
    /// `‖ρ_t‖²`
    pub rho_t: Option<f64>,
    /// `‖∇u_t‖²`
    pub grad_u_t: Option<f64>,
    /// `‖∇²d_t‖²`
    pub grad2_d_t: Option<f64>,
    /// `‖d_tt‖²`
    pub d_tt: Option<f64>,
}

#[derive(Debug, Clone)]
struct Sample {
    t: f64,
    rho: ScalarField,
    u: VectorField,
    d: Vec<Vec3>,
}

/// Running maximum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Sup(pub f64);

impl Sup {
    fn push(&mut self, v: Option<f64>) {
        if let Some(v) = v {
            self.0 = self.0.max(v);
        }
    }
}

/// Trapezoid integral remembering the previous integrand value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub value: f64,
    last: Option<f64>,
}

impl Integral {
    fn push(&mut self, v: Option<f64>, dt: f64) {
        if let (Some(prev), Some(cur)) = (self.last, v) {
            self.value += 0.5 * dt * (prev + cur);
        }
        self.last = v;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LedgerSups {
    pub grad_u: Sup,
    pub grad2_d: Sup,
    pub rho_u_t: Sup,
    pub grad2_u: Sup,
    pub grad_p: Sup,
    pub grad3_d: Sup,
    pub grad_rho: Sup,
    pub rho_t: Sup,
    /// `sup(‖∇u‖² + ‖∇²d‖²)`
    pub e1_block: Sup,
    /// `sup(‖√ρu_t‖² + ‖∇²u‖² + ‖∇p‖² + ‖∇³d‖²)`
    pub e2_block: Sup,
    /// `sup(‖∇ρ‖² + ‖ρ_t‖² + ‖u‖²_{H²} + ‖∇d‖²_{H²} + ‖∇p‖²)`
    pub e_block: Sup,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LedgerIntegrals {
    pub grad_u: Integral,
    pub lap_d: Integral,
    pub rho_u_t: Integral,
    pub grad2_u: Integral,
    pub grad_p: Integral,
    pub grad3_d: Integral,
    pub grad_u_t: Integral,
    pub d_tt: Integral,
    pub grad2_d_t: Integral,
}

/// Accumulates `C₀`, `E₁(t)`, `E₂(t)` and `E(t)` along a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub c0: f64,
    /// `‖∇u₀‖² + ‖∇²d₀‖²`, the second factor of the 3D smallness product.
    pub h1_level: f64,
    pub sups: LedgerSups,
    pub integrals: LedgerIntegrals,
    /// Number of updates at which a time-derivative term was undefined.
    pub skipped_rate_terms: usize,
    pub samples: usize,
    #[serde(skip)]
    history: Vec<Sample>,
}

impl EnergyLedger {
    /// Start a ledger at the initial state.
    pub fn new(state0: &FlowState) -> Result<Self> {
        let n = StaticNorms::of(state0)?;
        let mut ledger = Self {
            c0: n.kinetic + n.elastic,
            h1_level: n.grad_u + n.grad2_d,
            sups: LedgerSups::default(),
            integrals: LedgerIntegrals::default(),
            skipped_rate_terms: 0,
            samples: 0,
            history: Vec::new(),
        };
        ledger.absorb(state0, &n, RateNorms::default(), 0.0);
        Ok(ledger)
    }

    /// Fold in the state reached `dt` after the previous sample.
    pub fn update(&mut self, state: &FlowState, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::Precondition(format!("ledger update needs dt > 0, got {dt}")));
        }
        let n = StaticNorms::of(state)?;
        let rates = self.rates(state, dt)?;
        self.absorb(state, &n, rates, dt);
        Ok(())
    }

    fn rates(&self, state: &FlowState, dt: f64) -> Result<RateNorms> {
        let g = *state.grid();
        let vol = g.cell_volume();
        let Some(prev) = self.history.last() else {
            return Ok(RateNorms::default());
        };
        let inv = 1.0 / dt;
        let mut u_t = state.u.clone();
        for (c, p) in u_t.comps.iter_mut().zip(&prev.u.comps) {
            for (x, y) in c.iter_mut().zip(p) {
                *x = (*x - y) * inv;
            }
        }
        let rho_t = ScalarField {
            grid: g,
            values: state.rho.values.iter().zip(&prev.rho.values).map(|(a, b)| (a - b) * inv).collect(),
        };
        let d_t: Vec<Vec3> = state
            .d
            .values
            .iter()
            .zip(&prev.d)
            .map(|(a, b)| [(a[0] - b[0]) * inv, (a[1] - b[1]) * inv, (a[2] - b[2]) * inv])
            .collect();
        let d_tt = if self.history.len() >= 2 {
            // three-point second derivative on a non-uniform stencil
            let pp = &self.history[self.history.len() - 2];
            let h1 = prev.t - pp.t;
            let h2 = dt;
            let (c0, c1, c2) = (2.0 / (h1 * (h1 + h2)), -2.0 / (h1 * h2), 2.0 / (h2 * (h1 + h2)));
            let s = neumaier_sum(state.d.values.iter().zip(&prev.d).zip(&pp.d).map(|((a, b), c)| {
                let mut q = 0.0;
                for k in 0..3 {
                    let v = c0 * c[k] + c1 * b[k] + c2 * a[k];
                    q += v * v;
                }
                q
            }));
            Some(s * vol)
        } else {
            None
        };
        Ok(RateNorms {
            rho_u_t: Some(l2_norm_sq(&u_t, Some(&state.rho))?),
            rho_t: Some(l2_norm_sq(&rho_t, None)?),
            grad_u_t: Some(velocity_dirichlet(&u_t)),
            grad2_d_t: Some(hessian_sq(&g, &d_t)),
            d_tt,
        })
    }

    fn absorb(&mut self, state: &FlowState, n: &StaticNorms, r: RateNorms, dt: f64) {
        let s = &mut self.sups;
        s.grad_u.push(Some(n.grad_u));
        s.grad2_d.push(Some(n.grad2_d));
        s.rho_u_t.push(r.rho_u_t);
        s.grad2_u.push(Some(n.grad2_u));
        s.grad_p.push(Some(n.grad_p));
        s.grad3_d.push(Some(n.grad3_d));
        s.grad_rho.push(Some(n.grad_rho));
        s.rho_t.push(r.rho_t);
        s.e1_block.push(Some(n.grad_u + n.grad2_d));
        s.e2_block.push(Some(r.rho_u_t.unwrap_or(0.0) + n.grad2_u + n.grad_p + n.grad3_d));
        let u_h2 = n.u_sq + n.grad_u + n.grad2_u;
        let grad_d_h2 = n.elastic + n.grad2_d + n.grad3_d;
        s.e_block
            .push(Some(n.grad_rho + r.rho_t.unwrap_or(0.0) + u_h2 + grad_d_h2 + n.grad_p));

        let i = &mut self.integrals;
        i.grad_u.push(Some(n.grad_u), dt);
        i.lap_d.push(Some(n.lap_d), dt);
        i.rho_u_t.push(r.rho_u_t, dt);
        i.grad2_u.push(Some(n.grad2_u), dt);
        i.grad_p.push(Some(n.grad_p), dt);
        i.grad3_d.push(Some(n.grad3_d), dt);
        i.grad_u_t.push(r.grad_u_t, dt);
        i.d_tt.push(r.d_tt, dt);
        i.grad2_d_t.push(r.grad2_d_t, dt);

        let undefined = [r.rho_u_t, r.rho_t, r.grad_u_t, r.grad2_d_t, r.d_tt]
            .iter()
            .filter(|v| v.is_none())
            .count();
        if undefined > 0 {
            self.skipped_rate_terms += 1;
        }
        self.samples += 1;

        self.history.push(Sample {
            t: state.t,
            rho: state.rho.clone(),
            u: state.u.clone(),
            d: state.d.values.clone(),
        });
        if self.history.len() > 2 {
            self.history.remove(0);
        }
    }

    /// `E₁(t)`.
    pub fn e1(&self) -> f64 {
        let i = &self.integrals;
        self.sups.e1_block.0 + i.rho_u_t.value + i.grad2_u.value + i.grad_p.value + i.grad3_d.value
    }

    /// `E₂(t)`.
    pub fn e2(&self) -> f64 {
        let i = &self.integrals;
        self.sups.e2_block.0 + i.grad_u_t.value + i.d_tt.value + i.grad2_d_t.value
    }

    /// `E(t)`.
    pub fn e_total(&self) -> f64 {
        let i = &self.integrals;
        self.sups.e_block.0 + i.grad_u_t.value + i.grad2_d_t.value
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Boundary, DirectorField};

    fn rest(g: &Grid) -> FlowState {
        let rho = ScalarField::from_fn(g, |x| 1.0 + 0.5 * x[0]);
        FlowState::new(
            0.0,
            rho,
            VectorField::zeros(g),
            ScalarField::zeros(g),
            DirectorField::constant(g, [0.0, 0.0, 1.0]),
        )
        .unwrap()
    }

    #[test]
    fn rest_state_has_zero_e1() {
        let g = Grid::uniform(2, 8, 1.0, Boundary::DirichletBox).unwrap();
        let s = rest(&g);
        let mut l = EnergyLedger::new(&s).unwrap();
        assert_eq!(l.c0, 0.0);
        assert_eq!(l.e1(), 0.0);
        let mut s1 = s.clone();
        s1.t = 0.1;
        l.update(&s1, 0.1).unwrap();
        assert_eq!(l.sups.e2_block.0, 0.0);
    }

    #[test]
    fn frozen_state_integrates_linearly() {
        let g = Grid::uniform(2, 8, 1.0, Boundary::Periodic).unwrap();
        let mut s = rest(&g);
        s.u = VectorField::from_fn(&g, |x| [(6.28 * x[1]).sin(), 0.0, 0.0]);
        let mut l = EnergyLedger::new(&s).unwrap();
        let gu = velocity_dirichlet(&s.u);
        for k in 1..=3 {
            s.t = k as f64;
            l.update(&s, 1.0).unwrap();
            assert!((l.integrals.grad_u.value - k as f64 * gu).abs() < 1e-12 * gu);
        }
        assert_eq!(l.sups.rho_u_t.0, 0.0);
        assert_eq!(l.integrals.grad_u_t.value, 0.0);
        assert_eq!(l.integrals.d_tt.value, 0.0);
        assert_eq!(l.skipped_rate_terms, 2);
    }

    #[test]
    fn e1_and_e2_are_monotone() {
        let g = Grid::uniform(2, 8, 1.0, Boundary::Periodic).unwrap();
        let mut s = rest(&g);
        let mut l = EnergyLedger::new(&s).unwrap();
        let (mut e1, mut e2) = (l.e1(), l.e2());
        for k in 1..6 {
            s.t = k as f64 * 0.1;
            let a = (k as f64).sin();
            s.u = VectorField::from_fn(&g, |x| [a * (6.28 * x[1]).sin(), 0.0, 0.0]);
            l.update(&s, 0.1).unwrap();
            assert!(l.e1() >= e1 && l.e2() >= e2);
            e1 = l.e1();
            e2 = l.e2();
        }
    }

    #[test]
    fn circle_map_hessian() {
        // |∂xx d|² = 1 for the circle map; each centred difference contributes sin(h)/h
        let g = Grid::uniform(2, 64, 2.0 * std::f64::consts::PI, Boundary::Periodic).unwrap();
        let d = DirectorField::from_fn_normalized(&g, [1.0, 0.0, 0.0], |x| [x[0].cos(), x[0].sin(), 0.0]);
        let area = 4.0 * std::f64::consts::PI.powi(2);
        let h = g.spacing()[0];
        let factor = ((h).sin() / h).powi(4);
        assert!((hessian_sq(&g, &d.values) - area * factor).abs() < 1e-9 * area);
    }
}
