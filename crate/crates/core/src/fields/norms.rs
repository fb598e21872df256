use super::field::{neumaier_sum, DirectorField, ScalarField, Vec3Field, VectorField};
use super::grid::Grid;
use crate::error::{Error, Result};

/// A field that can report its pointwise squared magnitude at cell centres.
pub trait CellSquares {
    fn grid(&self) -> &Grid;
    fn cell_squares(&self) -> Vec<f64>;
}

impl CellSquares for ScalarField {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn cell_squares(&self) -> Vec<f64> {
        self.values.iter().map(|v| v * v).collect()
    }
}

/// Staggered components are averaged to centres first.
impl CellSquares for VectorField {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn cell_squares(&self) -> Vec<f64> {
        self.to_centers()
            .iter()
            .map(|v| v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
            .collect()
    }
}

impl CellSquares for DirectorField {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn cell_squares(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|v| v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
            .collect()
    }
}

impl CellSquares for Vec3Field {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn cell_squares(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|v| v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
            .collect()
    }
}

/// Per-axis gradient as returned by [`super::ops::gradient`].
impl CellSquares for [ScalarField] {
    fn grid(&self) -> &Grid {
        &self[0].grid
    }
    fn cell_squares(&self) -> Vec<f64> {
        let mut out = vec![0.0; self[0].values.len()];
        for comp in self {
            for (o, v) in out.iter_mut().zip(&comp.values) {
                *o += v * v;
            }
        }
        out
    }
}

/// `sqrt(Σ w·|f|²·cellVolume)`, summed in a fixed order.
pub fn l2_norm<F: CellSquares + ?Sized>(f: &F, weight: Option<&ScalarField>) -> Result<f64> {
    Ok(weighted_sq_sum(f.grid(), &f.cell_squares(), weight)?.sqrt())
}

/// Squared L² norm; avoids the round trip through `sqrt` for energies.
pub fn l2_norm_sq<F: CellSquares + ?Sized>(f: &F, weight: Option<&ScalarField>) -> Result<f64> {
    weighted_sq_sum(f.grid(), &f.cell_squares(), weight)
}

pub(crate) fn weighted_sq_sum(grid: &Grid, sq: &[f64], weight: Option<&ScalarField>) -> Result<f64> {
    if sq.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            field: "norm input".into(),
        });
    }
    let total = match weight {
        None => neumaier_sum(sq.iter().copied()),
        Some(w) => {
            grid.check_same(&w.grid, "l2_norm weight")?;
            if let Some((index, &value)) = w.values.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
                return Err(Error::NegativeWeight { index, value });
            }
            neumaier_sum(sq.iter().zip(&w.values).map(|(s, w)| s * w))
        }
    };
    Ok(total * grid.cell_volume())
}

/// `(Σ |f|^p · cellVolume)^(1/p)` of a scalar field.
pub fn lp_norm(f: &ScalarField, p: f64) -> f64 {
    let s = neumaier_sum(f.values.iter().map(|v| v.abs().powf(p)));
    (s * f.grid.cell_volume()).powf(1.0 / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{director_dirichlet, Boundary};
    use std::f64::consts::PI;

    #[test]
    fn zero_field_has_zero_norm() {
        let g = Grid::uniform(2, 8, 1.0, Boundary::Periodic).unwrap();
        assert_eq!(l2_norm(&ScalarField::zeros(&g), None).unwrap(), 0.0);
        assert_eq!(l2_norm(&VectorField::zeros(&g), None).unwrap(), 0.0);
    }

    #[test]
    fn weighted_constant() {
        let g = Grid::uniform(2, 16, 1.0, Boundary::Periodic).unwrap();
        let one = ScalarField::constant(&g, 1.0);
        let rho = ScalarField::constant(&g, 2.0);
        let n = l2_norm(&one, Some(&rho)).unwrap();
        assert!((n - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn negative_weight_is_named() {
        let g = Grid::uniform(2, 8, 1.0, Boundary::Periodic).unwrap();
        let mut rho = ScalarField::constant(&g, 1.0);
        rho.values[5] = -0.25;
        let err = l2_norm(&ScalarField::constant(&g, 1.0), Some(&rho)).unwrap_err();
        assert!(matches!(err, Error::NegativeWeight { index: 5, .. }));
        assert!(err.to_string().contains("rho >= 0"));
    }

    #[test]
    fn circle_map_elastic_energy_is_domain_area() {
        let area = 4.0 * PI * PI;
        let mut prev = f64::INFINITY;
        for n in [32, 64, 128] {
            let g = Grid::uniform(2, n, 2.0 * PI, Boundary::Periodic).unwrap();
            let d = DirectorField::from_fn_normalized(&g, [1.0, 0.0, 0.0], |x| [x[0].cos(), x[0].sin(), 0.0]);
            let err = (director_dirichlet(&d) - area).abs() / area;
            // face differences of the circle map: |Δd|²/h² = 4 sin²(h/2)/h²
            let h = g.spacing()[0];
            let exact = 1.0 - 4.0 * (0.5 * h).sin().powi(2) / (h * h);
            assert!((err - exact).abs() < 1e-12);
            assert!(err < prev / 3.5);
            prev = err;
        }
    }
}
