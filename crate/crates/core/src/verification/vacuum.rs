use serde::{Deserialize, Serialize};

use super::distance::{uniqueness_distance, Distance};
use super::{advance, Horizon};
use crate::dynamics::{Solver, SolverConfig};
use crate::error::{Error, Result};
use crate::fields::Grid;
use crate::initial::{build, regularize_density, InitialSpec};
use crate::parallel::parallel_map;
use crate::state::FlowState;

/// Increases of the distance below this are not reported.
pub const VACUUM_NOISE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VacuumPair {
    pub j: f64,
    pub k: f64,
    /// Componentwise sup over the output times.
    pub distance: Distance,
    /// Sup over the output times of the square root of the functional.
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VacuumTable {
    pub j_list: Vec<f64>,
    pub horizon: f64,
    pub outputs: usize,
    pub pairs: Vec<VacuumPair>,
    /// Pairs whose distance grows with `min(j, k)` beyond the noise floor.
    pub warnings: Vec<String>,
}

impl VacuumTable {
    pub fn is_monotone(&self) -> bool {
        self.warnings.is_empty()
    }
}

fn run_regularized(
    grid: &Grid,
    cfg: &SolverConfig,
    spec: &InitialSpec,
    j: f64,
    stops: &[f64],
) -> Result<Vec<FlowState>> {
    let mut state = build(spec, grid, cfg.d_star)?;
    state.rho = regularize_density(&state.rho, j)?;
    let mut solver = Solver::new(cfg.clone(), grid)?;
    let mut out = Vec::with_capacity(stops.len());
    let mut next = 0;
    let horizon = *stops.last().expect("at least one output time");
    advance(&mut solver, &mut state, Horizon::Time(horizon), stops, |s, _| {
        if next < stops.len() && s.t == stops[next] {
            out.push(s.clone());
            next += 1;
        }
        Ok(())
    })?;
    Ok(out)
}

/// Run the catalogue entry `spec` with `ρ₀ + 1/j` for every `j` and report
/// the sup over `outputs` equally spaced times of the pairwise uniqueness
/// distance. Runs execute on up to `threads` workers.
pub fn vacuum_approx_compare(
    grid: &Grid,
    cfg: &SolverConfig,
    spec: &InitialSpec,
    j_list: &[f64],
    horizon: f64,
    outputs: usize,
    threads: usize,
) -> Result<VacuumTable> {
    if j_list.is_empty() || j_list.iter().any(|j| !(j.is_finite() && *j > 0.0)) {
        return Err(Error::Precondition(format!(
            "regularisation indices must be positive and finite, got {j_list:?}"
        )));
    }
    if !(horizon.is_finite() && horizon > 0.0) || outputs == 0 {
        return Err(Error::Precondition(format!(
            "need a positive horizon and at least one output, got {horizon} and {outputs}"
        )));
    }
    let stops: Vec<f64> = (1..=outputs).map(|i| horizon * i as f64 / outputs as f64).collect();
    let runs = parallel_map(j_list, threads, |&j| run_regularized(grid, cfg, spec, j, &stops))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut pairs = Vec::new();
    for a in 0..j_list.len() {
        for b in a + 1..j_list.len() {
            let mut distance = Distance::default();
            let mut total = 0.0f64;
            for (x, y) in runs[a].iter().zip(&runs[b]) {
                let dist = uniqueness_distance(x, y)?;
                distance = distance.max(dist);
                total = total.max(dist.functional().sqrt());
            }
            pairs.push(VacuumPair {
                j: j_list[a],
                k: j_list[b],
                distance,
                total,
            });
        }
    }

    let mut warnings = Vec::new();
    for p in &pairs {
        for q in &pairs {
            if p.j.min(p.k) < q.j.min(q.k) && q.total > p.total + VACUUM_NOISE_FLOOR {
                warnings.push(format!(
                    "distance({}, {}) = {:e} exceeds distance({}, {}) = {:e}",
                    q.j, q.k, q.total, p.j, p.k, p.total
                ));
            }
        }
    }
    Ok(VacuumTable {
        j_list: j_list.to_vec(),
        horizon,
        outputs,
        pairs,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Viscosity;
    use crate::fields::Boundary;
    use crate::initial::InitialKind;

    fn cfg() -> SolverConfig {
        SolverConfig {
            viscosity: Viscosity::Implicit,
            ..Default::default()
        }
    }

    #[test]
    fn equal_indices_give_zero_distance() {
        let g = Grid::uniform(2, 8, 1.0, Boundary::DirichletBox).unwrap();
        let spec = InitialSpec {
            kind: InitialKind::VacuumBump,
            amplitude: 0.3,
            ..Default::default()
        };
        let t = vacuum_approx_compare(&g, &cfg(), &spec, &[50.0, 50.0], 0.01, 2, 2).unwrap();
        assert_eq!(t.pairs.len(), 1);
        assert_eq!(t.pairs[0].total, 0.0);
        assert!(t.is_monotone());
    }

    #[test]
    fn constant_density_distances_scale_with_index_gap() {
        let g = Grid::uniform(2, 8, 1.0, Boundary::DirichletBox).unwrap();
        let spec = InitialSpec {
            kind: InitialKind::Equilibrium,
            ..Default::default()
        };
        // equilibrium stays at rest, so only the density offset remains
        let t = vacuum_approx_compare(&g, &cfg(), &spec, &[100.0, 1000.0], 0.01, 1, 1).unwrap();
        let gap: f64 = 1.0 / 100.0 - 1.0 / 1000.0;
        assert!((t.pairs[0].distance.rho - gap).abs() < 1e-14);
        assert_eq!(t.pairs[0].distance.u, 0.0);
    }

    #[test]
    fn invalid_indices_are_rejected() {
        let g = Grid::uniform(2, 8, 1.0, Boundary::DirichletBox).unwrap();
        let spec = InitialSpec::default();
        assert!(vacuum_approx_compare(&g, &cfg(), &spec, &[0.0], 0.1, 1, 1).is_err());
        assert!(vacuum_approx_compare(&g, &cfg(), &spec, &[10.0], 0.0, 1, 1).is_err());
    }
}
