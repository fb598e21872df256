use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::distance::{uniqueness_distance, Distance};
use super::Horizon;
use crate::dynamics::{Solver, SolverConfig};
use crate::error::{Error, Result};
use crate::fields::{DirectorField, ScalarField};
use crate::state::FlowState;

/// Largest admissible perturbation scale.
pub const MAX_SIGMA: f64 = 1e-6;
const PERTURBATION_SEED: u64 = 0x5eed;

/// Which initial fields the twin perturbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perturbation {
    /// `ρ(1 + σξ)`, `u(1 + σ)`, `d + σξ` renormalised.
    All,
    DensityOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwinSample {
    pub t: f64,
    pub distance: Distance,
    pub functional: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwinReport {
    pub sigma: f64,
    pub steps: usize,
    pub samples: Vec<TwinSample>,
    /// Componentwise maximum over the run.
    pub max_distance: Distance,
    pub max_functional: f64,
    /// Least-squares slope of `ln functional` against time over the samples
    /// with a positive functional.
    pub growth_rate: Option<f64>,
}

fn perturb(state: &FlowState, sigma: f64, target: Perturbation) -> Result<FlowState> {
    if sigma == 0.0 {
        return Ok(state.clone());
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(PERTURBATION_SEED);
    let g = *state.grid();
    let rho = ScalarField::from_values(
        &g,
        state
            .rho
            .values
            .iter()
            .map(|r| r * (1.0 + sigma * rng.gen_range(-1.0..1.0)))
            .collect(),
    )?;
    let mut out = state.clone();
    out.rho = rho;
    if target == Perturbation::All {
        // scaling keeps u solenoidal and the walls at rest
        for v in out.u.comps.iter_mut().flatten() {
            *v *= 1.0 + sigma;
        }
        let vals = state
            .d
            .values
            .iter()
            .map(|d| {
                let e: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                let t = [d[0] + sigma * e[0], d[1] + sigma * e[1], d[2] + sigma * e[2]];
                let n = (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sqrt();
                [t[0] / n, t[1] / n, t[2] / n]
            })
            .collect();
        out.d = DirectorField::from_values(&g, vals, state.d.boundary)?;
    }
    out.validate()?;
    Ok(out)
}

fn bitwise_equal(a: &FlowState, b: &FlowState) -> bool {
    let same = |x: &[f64], y: &[f64]| x.len() == y.len() && x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits());
    a.t.to_bits() == b.t.to_bits()
        && same(&a.rho.values, &b.rho.values)
        && same(&a.p.values, &b.p.values)
        && a.u.comps.iter().zip(&b.u.comps).all(|(x, y)| same(x, y))
        && same(a.d.values.as_flattened(), b.d.values.as_flattened())
}

/// Run `state0` and a perturbed twin with identical step sizes and track the
/// uniqueness distance. With `sigma = 0` any bitwise difference is a
/// [`Error::Determinism`] failure.
pub fn twin_run_divergence(
    state0: &FlowState,
    cfg: &SolverConfig,
    sigma: f64,
    target: Perturbation,
    horizon: Horizon,
) -> Result<TwinReport> {
    if !(0.0..=MAX_SIGMA).contains(&sigma) {
        return Err(Error::Precondition(format!("sigma must lie in [0, {MAX_SIGMA:e}], got {sigma:e}")));
    }
    let g = *state0.grid();
    let mut a = state0.clone();
    let mut b = perturb(state0, sigma, target)?;
    let mut sa = Solver::new(cfg.clone(), &g)?;
    let mut sb = Solver::new(cfg.clone(), &g)?;
    let mut samples = Vec::new();
    let mut steps = 0usize;
    let t_end = match horizon {
        Horizon::Time(t) => t,
        Horizon::Steps(_) => f64::INFINITY,
    };
    let max_steps = match horizon {
        Horizon::Steps(n) => n,
        Horizon::Time(_) => usize::MAX,
    };
    let slack = if t_end.is_finite() { 1e-12 * t_end.abs().max(1.0) } else { 0.0 };
    while steps < max_steps && a.t < t_end - slack {
        let dt = sa.choose_dt(&a, t_end - a.t)?.min(sb.choose_dt(&b, t_end - b.t)?);
        sa.step(&mut a, dt)?;
        sb.step(&mut b, dt)?;
        steps += 1;
        if sigma == 0.0 {
            if !bitwise_equal(&a, &b) {
                return Err(Error::Determinism(format!(
                    "unperturbed twin runs differ bitwise after step {steps} (t = {})",
                    a.t
                )));
            }
            samples.push(TwinSample {
                t: a.t,
                distance: Distance::default(),
                functional: 0.0,
            });
            continue;
        }
        let distance = uniqueness_distance(&a, &b)?;
        samples.push(TwinSample {
            t: a.t,
            distance,
            functional: distance.functional(),
        });
    }
    let max_distance = samples.iter().fold(Distance::default(), |m, s| m.max(s.distance));
    let max_functional = samples.iter().fold(0.0f64, |m, s| m.max(s.functional));
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.functional > 0.0)
        .map(|s| (s.t, s.functional.ln()))
        .collect();
    let growth_rate = (pts.len() >= 2).then(|| {
        let n = pts.len() as f64;
        let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
        let sty: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
        sty / stt
    });
    Ok(TwinReport {
        sigma,
        steps,
        samples,
        max_distance,
        max_functional,
        growth_rate,
    })
}
