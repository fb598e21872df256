use serde::{Deserialize, Serialize};

use super::stencil::{cells_with_halo, Ghost, Padded};
use crate::dynamics::SolverConfig;
use crate::error::{Error, Result};
use crate::fields::{DirectorField, Grid, ScalarField, Vec3, VectorField};

/// Guards `√ρ₀` against exact zeros.
pub const DELTA_G: f64 = 1e-30;
/// Cells with `ρ₀` below this count as vacuum.
pub const VACUUM_RHO: f64 = 1e-12;
/// Largest admissible `|LHS|` in a vacuum cell.
pub const VACUUM_LHS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompatibilityMode {
    #[default]
    Reject,
    Warn,
}

impl std::str::FromStr for CompatibilityMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reject" => Ok(Self::Reject),
            "warn" => Ok(Self::Warn),
            _ => Err(Error::Config(format!("compatibility must be `reject` or `warn`, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityReport {
    /// Cell-centred `g₀`, components beyond `dim` are zero.
    pub g0: Vec<Vec3>,
    pub norm: f64,
    /// Vacuum cells where the momentum residual does not vanish.
    pub violations: Vec<usize>,
}

impl CompatibilityReport {
    /// `Ok` when no cell violates the condition or `mode` only warns.
    pub fn enforce(&self, mode: CompatibilityMode) -> Result<()> {
        if self.violations.is_empty() || mode == CompatibilityMode::Warn {
            Ok(())
        } else {
            Err(Error::CompatibilityViolation {
                cells: self.violations.clone(),
            })
        }
    }
}

/// `LHS = −νΔu₀ − ∇p₀ − λ div(∇d₀⊙∇d₀)` at cell centres, with `u₀` averaged
/// to centres and plain centred differences throughout.
pub fn momentum_residual(
    u0: &VectorField,
    p0: &ScalarField,
    d0: &DirectorField,
    cfg: &SolverConfig,
) -> Result<Vec<Vec3>> {
    let g = u0.grid;
    g.check_same(&p0.grid, "compatibility p0")?;
    g.check_same(&d0.grid, "compatibility d0")?;
    u0.ensure_finite("u0")?;
    p0.ensure_finite("p0")?;
    d0.ensure_finite("d0")?;
    let dim = g.dim();

    let centers = u0.to_centers();
    let comp = |f: &dyn Fn(usize) -> f64| (0..g.num_cells()).map(f).collect::<Vec<f64>>();
    let u: Vec<Padded> = (0..dim)
        .map(|a| Padded::new(&g, &comp(&|c| centers[c][a]), 1, Ghost::Odd))
        .collect();
    let p = Padded::new(&g, &p0.values, 1, Ghost::Even);
    let d: Vec<Padded> = (0..3)
        .map(|k| Padded::new(&g, &comp(&|c| d0.values[c][k]), 2, Ghost::Const(d0.boundary[k])))
        .collect();

    // stress M_ij = ∂_i d · ∂_j d on the interior plus one halo layer
    let halo = cells_with_halo(&g, 1);
    let mut stress: Vec<Vec<f64>> = vec![Vec::with_capacity(halo.len()); dim * dim];
    for &q in &halo {
        let grads: Vec<Vec3> = (0..dim).map(|i| [d[0].d1(q, i), d[1].d1(q, i), d[2].d1(q, i)]).collect();
        for i in 0..dim {
            for j in 0..dim {
                let m = (0..3).map(|k| grads[i][k] * grads[j][k]).sum();
                stress[i * dim + j].push(m);
            }
        }
    }
    let stress: Vec<Padded> = stress.into_iter().map(|m| Padded::from_halo(&g, m, 1)).collect();

    let mut out = vec![[0.0; 3]; g.num_cells()];
    for (c, q) in cells_with_halo(&g, 0).into_iter().enumerate() {
        for j in 0..dim {
            let div_m: f64 = (0..dim).map(|i| stress[i * dim + j].d1(q, i)).sum();
            out[c][j] = -cfg.nu * u[j].lap(q) - p.d1(q, j) - cfg.lambda * div_m;
        }
    }
    Ok(out)
}

/// `g₀ = LHS/√max(ρ₀, δ_g)` with its `L²` norm and the vacuum violations.
pub fn compatibility_residual(
    rho0: &ScalarField,
    u0: &VectorField,
    p0: &ScalarField,
    d0: &DirectorField,
    cfg: &SolverConfig,
) -> Result<CompatibilityReport> {
    let g: Grid = rho0.grid;
    rho0.ensure_finite("rho0")?;
    if let Some((index, &value)) = rho0.values.iter().enumerate().find(|(_, r)| **r < 0.0) {
        return Err(Error::NegativeWeight { index, value });
    }
    let lhs = momentum_residual(u0, p0, d0, cfg)?;
    let mut violations = Vec::new();
    let mut sq = 0.0;
    let g0: Vec<Vec3> = lhs
        .iter()
        .zip(&rho0.values)
        .enumerate()
        .map(|(c, (l, &r))| {
            let mag = (l[0] * l[0] + l[1] * l[1] + l[2] * l[2]).sqrt();
            if r < VACUUM_RHO && mag > VACUUM_LHS_TOL {
                violations.push(c);
            }
            let s = r.max(DELTA_G).sqrt();
            let v = [l[0] / s, l[1] / s, l[2] / s];
            sq += v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            v
        })
        .collect();
    Ok(CompatibilityReport {
        g0,
        norm: (sq * g.cell_volume()).sqrt(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Boundary;
    use std::f64::consts::PI;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn rest_state_with_constant_director_is_compatible() {
        for b in [Boundary::Periodic, Boundary::DirichletBox] {
            let g = Grid::uniform(2, 12, 1.0, b).unwrap();
            let r = compatibility_residual(
                &ScalarField::constant(&g, 0.7),
                &VectorField::zeros(&g),
                &ScalarField::zeros(&g),
                &DirectorField::constant(&g, [0.0, 0.0, 1.0]),
                &cfg(),
            )
            .unwrap();
            assert_eq!(r.norm, 0.0);
            assert!(r.violations.is_empty());
        }
    }

    #[test]
    fn circle_map_with_absorbing_pressure_vanishes() {
        let mut prev = f64::INFINITY;
        for n in [16, 32, 64] {
            let g = Grid::uniform(2, n, 2.0 * PI, Boundary::Periodic).unwrap();
            let d = DirectorField::from_fn_normalized(&g, [0.0, 0.0, 1.0], |x| [x[0].cos(), x[0].sin(), 0.0]);
            // p₀ = −λ|∇d₀|²/2 with |∇d₀|² = 1
            let p = ScalarField::constant(&g, -0.5);
            let r = compatibility_residual(&ScalarField::constant(&g, 1.0), &VectorField::zeros(&g), &p, &d, &cfg())
                .unwrap();
            assert!(r.norm <= prev.max(1e-12));
            assert!(r.norm < 1e-12, "n={n}: {}", r.norm);
            prev = r.norm;
        }
    }

    #[test]
    fn stress_divergence_matches_analytic_force() {
        // d = normalised (1, ε sin x, 0) depends on x only, so the x component
        // is −λ ∂_x |∂_x d|² with |∂_x d|² = ε² cos²x / s², s = 1 + ε² sin²x.
        let eps = 0.3;
        let exact = |x: f64| {
            let (sn, cs) = x.sin_cos();
            let s = 1.0 + eps * eps * sn * sn;
            2.0 * eps * eps * sn * cs * (1.0 / (s * s) + 2.0 * eps * eps * cs * cs / (s * s * s))
        };
        let mut errs = Vec::new();
        for n in [32, 64, 128] {
            let g = Grid::uniform(2, n, 2.0 * PI, Boundary::Periodic).unwrap();
            let d = DirectorField::from_fn_normalized(&g, [0.0, 0.0, 1.0], |x| [1.0, eps * x[0].sin(), 0.0]);
            let lhs =
                momentum_residual(&VectorField::zeros(&g), &ScalarField::zeros(&g), &d, &cfg()).unwrap();
            let err = g
                .cell_indices()
                .map(|ijk| (lhs[g.index(ijk)][0] - exact(g.center(ijk)[0])).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        let order = (errs[1] / errs[2]).log2();
        assert!(order > 1.8, "{errs:?}");
    }

    #[test]
    fn vacuum_cells_with_motion_are_reported() {
        let g = Grid::uniform(2, 8, 1.0, Boundary::DirichletBox).unwrap();
        let mut rho = ScalarField::constant(&g, 1.0);
        let vac = g.index([4, 4, 0]);
        rho.values[vac] = 0.0;
        let u = VectorField::from_fn(&g, |x| [(PI * x[1]).sin(), 0.0, 0.0]);
        let r = compatibility_residual(&rho, &u, &ScalarField::zeros(&g), &DirectorField::constant(&g, [0.0, 0.0, 1.0]), &cfg())
            .unwrap();
        assert_eq!(r.violations, vec![vac]);
        assert!(matches!(
            r.enforce(CompatibilityMode::Reject),
            Err(Error::CompatibilityViolation { ref cells }) if cells == &vec![vac]
        ));
        assert!(r.enforce(CompatibilityMode::Warn).is_ok());
    }
}
