//! Built-in invariant suite run by `verify`.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::twin::{twin_run_divergence, Perturbation};
use super::{advance, Horizon};
use crate::diagnostics::EnergyTerms;
use crate::dynamics::{pressure_project, Solver, SolverConfig};
use crate::error::Result;
use crate::fields::{divergence, face_gradient, Boundary, DirectorField, Grid, ScalarField, VectorField};
use crate::initial::{build, regularize_density, InitialKind, InitialSpec};
use crate::state::FlowState;
use crate::transport::{total_mass, DensityBounds};

const SEED: u64 = 20_240_917;
const DUALITY_TOL: f64 = 1e-10;
const IDEMPOTENCE_TOL: f64 = 1e-9;
const MASS_TOL: f64 = 1e-12;
const BOUND_TOL: f64 = 1e-12;
const UNIT_TOL: f64 = 1e-14;
const ENERGY_TOL: f64 = 1e-6;
const STATIONARY_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    /// Cells per axis of the coupled runs.
    pub cells: usize,
    pub steps: usize,
    /// Mutation fixture: reverse the elastic force.
    pub flip_elastic_sign: bool,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            cells: 32,
            steps: 200,
            flip_elastic_sign: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub name: String,
    pub passed: bool,
    /// Measured value against its tolerance, or the error that stopped it.
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub rows: Vec<SuiteRow>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.rows.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect()
    }
}

/// `(passed, detail)` of one check.
type Check = Result<(bool, String)>;

fn random_field(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn random_velocity(rng: &mut impl Rng, g: &Grid) -> Result<VectorField> {
    let mut u = VectorField::from_components(g, (0..g.dim()).map(|a| random_field(rng, g.face_len(a))).collect())?;
    u.zero_walls();
    Ok(u)
}

fn duality() -> Check {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for (dim, b) in [(2, Boundary::Periodic), (3, Boundary::Periodic), (2, Boundary::DirichletBox)] {
        let g = Grid::uniform(dim, 12, 1.3, b)?;
        let p = ScalarField::from_values(&g, random_field(&mut rng, g.num_cells()))?;
        let v = random_velocity(&mut rng, &g)?;
        let gp = face_gradient(&p)?;
        let dv = divergence(&v)?;
        let lhs: f64 = gp.comps.iter().flatten().zip(v.comps.iter().flatten()).map(|(x, y)| x * y).sum();
        let rhs: f64 = p.values.iter().zip(&dv.values).map(|(x, y)| x * y).sum();
        let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
        worst = worst.max((lhs + rhs).abs() / scale);
    }
    Ok((worst <= DUALITY_TOL, format!("max relative defect {worst:.2e} (tol {DUALITY_TOL:e})")))
}

fn idempotence() -> Check {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(SEED + 1);
    let cfg = SolverConfig::default();
    let mut worst = 0.0f64;
    for b in [Boundary::Periodic, Boundary::DirichletBox] {
        let g = Grid::uniform(2, 24, 1.0, b)?;
        let rho = ScalarField::from_values(&g, (0..g.num_cells()).map(|_| rng.gen_range(0.5..2.0)).collect())?;
        let u_star = random_velocity(&mut rng, &g)?;
        let (once, _) = pressure_project(&u_star, &rho, &cfg, 0.01)?;
        let (twice, _) = pressure_project(&once, &rho, &cfg, 0.01)?;
        let diff = once
            .comps
            .iter()
            .flatten()
            .zip(twice.comps.iter().flatten())
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        worst = worst.max(diff / once.max_abs());
    }
    Ok((worst <= IDEMPOTENCE_TOL, format!("max relative change {worst:.2e} (tol {IDEMPOTENCE_TOL:e})")))
}

/// Outcome of a catalogue run monitored step by step.
struct Monitored {
    mass_drift: f64,
    bound_excursion: f64,
    unit_violation: f64,
    energy_increase: f64,
}

fn monitored_run(state0: FlowState, cfg: &SolverConfig, horizon: Horizon) -> Result<Monitored> {
    let g = *state0.grid();
    let mut state = state0;
    let mut solver = Solver::new(cfg.clone(), &g)?;
    let bounds = DensityBounds::from_initial(&state.rho)?;
    let m0 = total_mass(&state.rho);
    let mut e = EnergyTerms::of(&state)?.total(cfg.lambda);
    let scale = e.max(1.0);
    let mut out = Monitored {
        mass_drift: 0.0,
        bound_excursion: 0.0,
        unit_violation: 0.0,
        energy_increase: f64::NEG_INFINITY,
    };
    advance(&mut solver, &mut state, horizon, &[], |s, _| {
        out.mass_drift = out.mass_drift.max(((total_mass(&s.rho) - m0) / m0).abs());
        out.bound_excursion = out.bound_excursion.max(bounds.excursion(&s.rho));
        out.unit_violation = out.unit_violation.max(s.d.max_unit_violation());
        let next = EnergyTerms::of(s)?.total(cfg.lambda);
        out.energy_increase = out.energy_increase.max((next - e) / scale);
        e = next;
        Ok(())
    })?;
    Ok(out)
}

fn periodic_square(n: usize) -> Result<Grid> {
    Grid::uniform(2, n, 2.0 * PI, Boundary::Periodic)
}

/// Vortex, twist and a density hole regularised away from zero.
fn coupled_state(opts: &SuiteOptions, cfg: &SolverConfig) -> Result<FlowState> {
    let g = Grid::uniform(2, opts.cells, 1.0, Boundary::DirichletBox)?;
    let spec = InitialSpec {
        kind: InitialKind::VacuumBump,
        amplitude: 0.5,
        ..Default::default()
    };
    let mut s = build(&spec, &g, cfg.d_star)?;
    s.rho = regularize_density(&s.rho, 2.0)?;
    Ok(s)
}

fn transport_rows(opts: &SuiteOptions, cfg: &SolverConfig) -> Result<Monitored> {
    monitored_run(coupled_state(opts, cfg)?, cfg, Horizon::Steps(opts.steps))
}

/// Circle map of wavenumber 3 with a small phase modulation in y. With the
/// correct coupling this is a stable neighbour of a stationary point; with
/// the elastic force reversed the y-mode grows, which makes it the probe
/// for sign errors in the energy transfer.
fn phase_twist(opts: &SuiteOptions, cfg: &SolverConfig) -> Result<FlowState> {
    let g = periodic_square(opts.cells)?;
    let mut s = build(&InitialSpec::default(), &g, cfg.d_star)?;
    s.d = DirectorField::from_fn_normalized(&g, cfg.d_star, |x| {
        let t = 3.0 * x[0] + 0.1 * x[1].cos();
        [t.cos(), t.sin(), 0.0]
    });
    Ok(s)
}

fn energy_rows(opts: &SuiteOptions, cfg: &SolverConfig) -> Check {
    let perturbed = build(
        &InitialSpec {
            kind: InitialKind::PerturbedCircle,
            ..Default::default()
        },
        &periodic_square(opts.cells)?,
        cfg.d_star,
    )?;
    let runs = [
        (coupled_state(opts, cfg)?, Horizon::Steps(opts.steps)),
        (perturbed, Horizon::Steps(opts.steps)),
        (phase_twist(opts, cfg)?, Horizon::Time(1.0)),
    ];
    let mut worst = f64::NEG_INFINITY;
    for (s, h) in runs {
        worst = worst.max(monitored_run(s, cfg, h)?.energy_increase);
    }
    Ok((
        worst <= ENERGY_TOL,
        format!("max relative energy increase per step {worst:.2e} (tol {ENERGY_TOL:e})"),
    ))
}

fn stationarity(opts: &SuiteOptions, cfg: &SolverConfig) -> Check {
    let g = periodic_square(opts.cells)?;
    let spec = InitialSpec {
        kind: InitialKind::CircleMap,
        ..Default::default()
    };
    let mut s = build(&spec, &g, cfg.d_star)?;
    let d0 = s.d.clone();
    let mut solver = Solver::new(cfg.clone(), &g)?;
    advance(&mut solver, &mut s, Horizon::Time(1.0), &[], |_, _| Ok(()))?;
    let drift = s
        .d
        .values
        .iter()
        .zip(&d0.values)
        .flat_map(|(a, b)| (0..3).map(move |k| (a[k] - b[k]).abs()))
        .fold(0.0f64, f64::max);
    Ok((drift <= STATIONARY_TOL, format!("sup drift over t in [0, 1] {drift:.2e} (tol {STATIONARY_TOL:e})")))
}

fn determinism(opts: &SuiteOptions, cfg: &SolverConfig) -> Check {
    let s = coupled_state(opts, cfg)?;
    let r = twin_run_divergence(&s, cfg, 0.0, Perturbation::All, Horizon::Steps(opts.steps))?;
    Ok((true, format!("{} steps bitwise identical", r.steps)))
}

fn timed(rows: &mut Vec<SuiteRow>, name: &str, f: impl FnOnce() -> Check) {
    let t0 = Instant::now();
    let (passed, detail) = match f() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    rows.push(SuiteRow {
        name: name.into(),
        passed,
        detail,
        seconds: t0.elapsed().as_secs_f64(),
    });
}

/// Run every invariant row with fixed seeds.
pub fn run_suite(opts: &SuiteOptions) -> SuiteReport {
    let cfg = SolverConfig {
        flip_elastic_sign: opts.flip_elastic_sign,
        rho_floor: 0.0,
        ..Default::default()
    };
    let mut rows = Vec::new();
    timed(&mut rows, "operator_duality", duality);
    timed(&mut rows, "projection_idempotence", idempotence);

    let t0 = Instant::now();
    let transport = transport_rows(opts, &cfg);
    let secs = t0.elapsed().as_secs_f64();
    let row = |name: &str, pick: &dyn Fn(&Monitored) -> (bool, String)| {
        let (passed, detail) = match &transport {
            Ok(m) => pick(m),
            Err(e) => (false, format!("error: {e}")),
        };
        SuiteRow {
            name: name.into(),
            passed,
            detail,
            seconds: secs,
        }
    };
    rows.push(row("mass_conservation", &|m| {
        (m.mass_drift <= MASS_TOL, format!("max relative drift {:.2e} (tol {MASS_TOL:e})", m.mass_drift))
    }));
    rows.push(row("max_principle", &|m| {
        (
            m.bound_excursion <= BOUND_TOL,
            format!("max excursion {:.2e} (tol {BOUND_TOL:e})", m.bound_excursion),
        )
    }));
    rows.push(row("unit_norm", &|m| {
        (
            m.unit_violation <= UNIT_TOL,
            format!("max ||d| - 1| {:.2e} (tol {UNIT_TOL:e})", m.unit_violation),
        )
    }));
    timed(&mut rows, "energy_dissipation", || energy_rows(opts, &cfg));
    timed(&mut rows, "harmonic_map_stationarity", || stationarity(opts, &cfg));
    timed(&mut rows, "determinism", || determinism(opts, &cfg));
    SuiteReport { rows }
}
