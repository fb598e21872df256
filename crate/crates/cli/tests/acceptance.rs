//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Criteria run concurrently; lines print in order.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::Instant;

use nematic_cli::config::RunConfig;
use nematic_cli::runner::{execute, RunStatus};
use nematic_cli::sweep::sweep;
use nematic_core::diagnostics::{residual_from_terms, EnergyTerms};
use nematic_core::director::{constraint_residual, director_step};
use nematic_core::fields::l2_norm;
use nematic_core::initial::{build, InitialKind, InitialSpec};
use nematic_core::parallel::{parallel_map, worker_threads};
use nematic_core::verification::{
    mms_run_parallel, twin_run_divergence, vacuum_approx_compare, Horizon, MmsCase, Perturbation,
};
use nematic_core::{Boundary, DirectorField, DtPolicy, Grid, Result, Solver, SolverConfig, Viscosity};

const MASS_TOL: f64 = 1e-12;
const BOUNDS_TOL: f64 = 1e-12;
const UNIT_TOL: f64 = 1e-14;
const DIV_TOL_PERIODIC: f64 = 1e-10;
const DIV_TOL_BOX: f64 = 1e-8;
const ENERGY_TOL: f64 = 1e-6;
const CATALOGUE_STEPS: usize = 500;
const RESIDUAL_MIN_RATIO: f64 = 3.0;
const CONSTRAINT_ORDER: (f64, f64) = (1.8, 2.2);
const STATIONARY_DRIFT: f64 = 1e-3;
const TAYLOR_GREEN_REL: f64 = 0.02;
const MMS_UD_ORDER: (f64, f64) = (1.7, 2.3);
const MMS_RHO_ORDER: f64 = 0.8;
const MMS_BUDGET_SECONDS: f64 = 600.0;
const TWIN_STEPS: usize = 1000;
const SWEEP_AMPLITUDES: [f64; 5] = [0.0, 0.02, 0.05, 0.1, 0.2];
const SWEEP_EPS0: f64 = 0.05;

/// Verdict and the measured values behind it.
type Outcome = Result<(bool, String)>;

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> RunConfig {
    RunConfig::load(&configs_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

const CATALOGUE: [&str; 5] = [
    "equilibrium.ini",
    "circle_map.ini",
    "perturbed_circle.ini",
    "taylor_green.ini",
    "vacuum_bump.ini",
];

/// Worst per-step invariant values of one catalogue run.
struct CatalogueRun {
    name: &'static str,
    periodic: bool,
    mass: f64,
    bounds: f64,
    unit: f64,
    div: f64,
    energy_increase: f64,
    energy_scale: f64,
}

fn catalogue_runs() -> Result<Vec<CatalogueRun>> {
    parallel_map(&CATALOGUE, worker_threads(), |&name| {
        let mut cfg = load(name);
        cfg.run.horizon = Horizon::Steps(CATALOGUE_STEPS);
        let s = execute(&cfg, None)?;
        if s.status != RunStatus::Completed || s.steps != CATALOGUE_STEPS {
            return Err(nematic_core::Error::Verification(format!("{name}: run ended with {:?}", s.status)));
        }
        let i = &s.invariants;
        Ok(CatalogueRun {
            name,
            periodic: cfg.grid.boundary == Boundary::Periodic,
            mass: i.max_mass_drift,
            bounds: i.max_rho_excursion,
            unit: i.max_unit_violation,
            div: i.max_div_u,
            energy_increase: i.max_energy_increase,
            energy_scale: s.initial_energy.max(1.0),
        })
    })
    .into_iter()
    .collect()
}

/// Pass when `value(run) <= tol(run)` for every run; the detail lists the
/// worst margin.
fn per_run(runs: &[CatalogueRun], value: impl Fn(&CatalogueRun) -> f64, tol: impl Fn(&CatalogueRun) -> f64) -> (bool, String) {
    let ok = runs.iter().all(|r| value(r) <= tol(r));
    let worst = runs
        .iter()
        .max_by(|a, b| (value(a) / tol(a)).total_cmp(&(value(b) / tol(b))))
        .expect("catalogue is non-empty");
    let detail = format!(
        "worst {} = {:.3e} (tol {:.1e}) over {} runs",
        worst.name,
        value(worst),
        tol(worst),
        runs.len()
    );
    (ok, detail)
}

fn criterion_6() -> Outcome {
    // director heat flow (u = 0) on perturbed_circle, h halved and dt quartered
    let mut worst = Vec::new();
    for n in [32usize, 64, 128] {
        let g = Grid::uniform(2, n, 2.0 * PI, Boundary::Periodic)?;
        let h = g.spacing()[0];
        let dt = 0.1 * h * h;
        let cfg = SolverConfig {
            dt_policy: DtPolicy::Fixed(dt),
            ..Default::default()
        };
        let spec = InitialSpec {
            kind: InitialKind::PerturbedCircle,
            ..Default::default()
        };
        let mut s = build(&spec, &g, cfg.d_star)?;
        let steps = (0.05 / dt).round() as usize;
        let mut a = EnergyTerms::of(&s)?;
        let mut m = 0.0f64;
        for _ in 0..steps {
            s.d = director_step(&s, &cfg, dt)?;
            s.t += dt;
            let b = EnergyTerms::of(&s)?;
            m = m.max(residual_from_terms(&a, &b, dt, &cfg).abs());
            a = b;
        }
        worst.push(m);
    }
    let ratios: Vec<f64> = worst.windows(2).map(|w| w[0] / w[1]).collect();
    let ok = ratios.iter().all(|r| *r >= RESIDUAL_MIN_RATIO);
    Ok((ok, format!("max|R| {}, ratios {ratios:.2?} (need >= {RESIDUAL_MIN_RATIO})", sci(&worst))))
}

fn criterion_7() -> Outcome {
    let mut norms = Vec::new();
    for n in [32usize, 64, 128] {
        let g = Grid::uniform(2, n, 2.0 * PI, Boundary::Periodic)?;
        let d = DirectorField::from_fn_normalized(&g, [0.0, 0.0, 1.0], |x| {
            let th = x[0] + 0.5 * x[1].sin();
            let ph = 0.4 * x[0].cos() * x[1].sin();
            [th.cos() * ph.cos(), th.sin() * ph.cos(), ph.sin()]
        });
        norms.push(l2_norm(&constraint_residual(&d)?, None)?);
    }
    let orders: Vec<f64> = norms.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let ok = orders
        .iter()
        .all(|p| (CONSTRAINT_ORDER.0..=CONSTRAINT_ORDER.1).contains(p));
    Ok((ok, format!("norms {}, orders {orders:.3?} (need {CONSTRAINT_ORDER:?})", sci(&norms))))
}

fn criterion_8() -> Outcome {
    let g = Grid::uniform(2, 64, 2.0 * PI, Boundary::Periodic)?;
    let cfg = SolverConfig::default();
    let spec = InitialSpec {
        kind: InitialKind::CircleMap,
        ..Default::default()
    };
    let mut s = build(&spec, &g, cfg.d_star)?;
    let d0 = s.d.clone();
    let mut solver = Solver::new(cfg, &g)?;
    let mut drift = 0.0f64;
    nematic_core::verification::advance(&mut solver, &mut s, Horizon::Time(1.0), &[], |st, _| {
        for (a, b) in st.d.values.iter().zip(&d0.values) {
            for k in 0..3 {
                drift = drift.max((a[k] - b[k]).abs());
            }
        }
        Ok(())
    })?;
    Ok((drift <= STATIONARY_DRIFT, format!("sup drift {drift:.3e} over t in [0, {}] (tol {STATIONARY_DRIFT:.0e})", s.t)))
}

fn criterion_9() -> Outcome {
    let g = Grid::uniform(2, 64, 2.0 * PI, Boundary::Periodic)?;
    let cfg = SolverConfig::default();
    let spec = InitialSpec {
        kind: InitialKind::TaylorGreen,
        ..Default::default()
    };
    let mut s = build(&spec, &g, cfg.d_star)?;
    let d0 = s.d.clone();
    let k0 = EnergyTerms::of(&s)?.kinetic;
    let nu = cfg.nu;
    let mut solver = Solver::new(cfg, &g)?;
    let mut worst = 0.0f64;
    let mut frozen = true;
    nematic_core::verification::advance(&mut solver, &mut s, Horizon::Time(0.5), &[], |st, _| {
        frozen &= st.d.values == d0.values;
        let k = EnergyTerms::of(st)?.kinetic;
        worst = worst.max((k / (k0 * (-4.0 * nu * st.t).exp()) - 1.0).abs());
        Ok(())
    })?;
    Ok((
        frozen && worst <= TAYLOR_GREEN_REL,
        format!("max relative deviation {worst:.3e} (tol {TAYLOR_GREEN_REL}), director frozen: {frozen}"),
    ))
}

fn criterion_10() -> Outcome {
    let t0 = Instant::now();
    let t = mms_run_parallel(&SolverConfig::default(), &[32, 64, 128], MmsCase::Manufactured, worker_threads())?;
    let secs = t0.elapsed().as_secs_f64();
    let in_band = |p: &f64| (MMS_UD_ORDER.0..=MMS_UD_ORDER.1).contains(p);
    let ok = t.u.pairwise.iter().all(in_band)
        && t.d.pairwise.iter().all(in_band)
        && t.rho.pairwise.iter().all(|p| *p >= MMS_RHO_ORDER)
        && secs <= MMS_BUDGET_SECONDS;
    Ok((
        ok,
        format!(
            "orders u {:.3?}, d {:.3?}, rho {:.3?}; {secs:.1} s (budget {MMS_BUDGET_SECONDS} s)",
            t.u.pairwise, t.d.pairwise, t.rho.pairwise
        ),
    ))
}

fn criterion_11() -> Outcome {
    let g = Grid::uniform(2, 32, 2.0 * PI, Boundary::Periodic)?;
    let cfg = SolverConfig::default();
    let spec = InitialSpec {
        kind: InitialKind::PerturbedCircle,
        seed: 7,
        ..Default::default()
    };
    let s0 = build(&spec, &g, cfg.d_star)?;
    // any bitwise difference is an error
    let twin = twin_run_divergence(&s0, &cfg, 0.0, Perturbation::All, Horizon::Steps(TWIN_STEPS))?;
    let twin_ok = twin.steps == TWIN_STEPS && twin.max_functional == 0.0;

    let vg = Grid::uniform(2, 32, 1.0, Boundary::DirichletBox)?;
    let vcfg = SolverConfig {
        viscosity: Viscosity::Implicit,
        ..Default::default()
    };
    let vspec = InitialSpec {
        kind: InitialKind::VacuumBump,
        amplitude: 0.3,
        ..Default::default()
    };
    let table = vacuum_approx_compare(&vg, &vcfg, &vspec, &[10.0, 100.0, 1000.0], 0.1, 5, worker_threads())?;
    let consecutive: Vec<f64> = table
        .pairs
        .iter()
        .filter(|p| p.k == 10.0 * p.j)
        .map(|p| p.total)
        .collect();
    let decreasing = consecutive.windows(2).all(|w| w[1] < w[0]);
    Ok((
        twin_ok && decreasing && table.is_monotone(),
        format!(
            "twin sigma=0: {} steps, max distance {:e}; vacuum distances d(10,100), d(100,1000) = {}",
            twin.steps, twin.max_functional, sci(&consecutive)
        ),
    ))
}

fn criterion_12() -> Outcome {
    let mut cfg = load("sweep_vacuum.ini");
    cfg.physics.eps0 = SWEEP_EPS0;
    let rows = sweep(&cfg, &SWEEP_AMPLITUDES, worker_threads())?;
    let small: Vec<_> = rows.iter().filter(|r| r.smallness != "not_satisfied").collect();
    let ok = !small.is_empty() && small.iter().all(|r| !r.blew_up);
    Ok((
        ok,
        format!(
            "{} of {} amplitudes pass smallness at eps0={SWEEP_EPS0}; blow-ups among them: {}",
            small.len(),
            rows.len(),
            small.iter().filter(|r| r.blew_up).count()
        ),
    ))
}

fn main() {
    type Check = fn() -> Outcome;
    // criteria 1 to 5 share the catalogue runs
    let checks: Vec<(usize, &str, Check)> = vec![
        (6, "energy identity refinement", criterion_6),
        (7, "constraint identity order", criterion_7),
        (8, "harmonic-map stationarity", criterion_8),
        (9, "Taylor-Green decay", criterion_9),
        (10, "MMS convergence", criterion_10),
        (11, "determinism and vacuum approximation", criterion_11),
        (12, "smallness sweep consistency", criterion_12),
    ];

    let t0 = Instant::now();
    let (catalogue, rest) = std::thread::scope(|s| {
        let cat = s.spawn(catalogue_runs);
        let rest = parallel_map(&checks, worker_threads(), |(_, _, f)| f());
        (cat.join().expect("catalogue runs panicked"), rest)
    });

    let mut lines: Vec<(usize, &str, Outcome)> = Vec::new();
    match catalogue {
        Ok(runs) => {
            lines.push((1, "mass conservation", Ok(per_run(&runs, |r| r.mass, |_| MASS_TOL))));
            lines.push((2, "density max principle", Ok(per_run(&runs, |r| r.bounds, |_| BOUNDS_TOL))));
            lines.push((3, "unit constraint", Ok(per_run(&runs, |r| r.unit, |_| UNIT_TOL))));
            lines.push((
                4,
                "incompressibility",
                Ok(per_run(&runs, |r| r.div, |r| if r.periodic { DIV_TOL_PERIODIC } else { DIV_TOL_BOX })),
            ));
            lines.push((
                5,
                "energy dissipation",
                Ok(per_run(&runs, |r| r.energy_increase, |r| ENERGY_TOL * r.energy_scale)),
            ));
        }
        Err(e) => {
            for (i, name) in [
                "mass conservation",
                "density max principle",
                "unit constraint",
                "incompressibility",
                "energy dissipation",
            ]
            .into_iter()
            .enumerate()
            {
                lines.push((i + 1, name, Err(nematic_core::Error::Verification(e.to_string()))));
            }
        }
    }
    for ((n, name, _), r) in checks.iter().zip(rest) {
        lines.push((*n, name, r));
    }

    let mut failed = 0;
    for (n, name, r) in &lines {
        let (ok, detail) = match r {
            Ok((ok, d)) => (*ok, d.clone()),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!("criterion {n:>2} {:<4} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.1} s",
        lines.len() - failed,
        lines.len(),
        t0.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
