use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fields::ops::vec3_dirichlet_diff;
use crate::fields::{l2_norm, lp_norm, ScalarField, VectorField};
use crate::state::FlowState;

/// Components of the uniqueness distance between two states.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Distance {
    /// `‖ρ − ρ̂‖_{3/2}`
    pub rho: f64,
    /// `‖√ρ (u − û)‖₂`, weighted by the first state's density.
    pub u: f64,
    /// `‖∇(d − d̂)‖₂`
    pub d: f64,
}

impl Distance {
    /// `‖ρ − ρ̂‖²_{3/2} + ‖√ρ(u − û)‖₂² + ‖∇(d − d̂)‖₂²`.
    pub fn functional(&self) -> f64 {
        self.rho * self.rho + self.u * self.u + self.d * self.d
    }

    pub fn max(self, o: Distance) -> Distance {
        Distance {
            rho: self.rho.max(o.rho),
            u: self.u.max(o.u),
            d: self.d.max(o.d),
        }
    }
}

pub fn uniqueness_distance(a: &FlowState, b: &FlowState) -> Result<Distance> {
    let g = a.grid();
    g.check_same(b.grid(), "distance")?;
    let drho = ScalarField {
        grid: *g,
        values: a.rho.values.iter().zip(&b.rho.values).map(|(x, y)| x - y).collect(),
    };
    let du = VectorField::from_components(
        g,
        a.u.comps
            .iter()
            .zip(&b.u.comps)
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect())
            .collect(),
    )?;
    Ok(Distance {
        rho: lp_norm(&drho, 1.5),
        u: l2_norm(&du, Some(&a.rho))?,
        d: vec3_dirichlet_diff(&a.d, &b.d)?.sqrt(),
    })
}
