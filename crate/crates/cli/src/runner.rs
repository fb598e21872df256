//! One run: time loop with the blow-up monitor, diagnostics CSV, snapshots
//! and the run summary.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use nematic_core::diagnostics::{
    invariant_report, smallness_check, DiagnosticsRecord, DiagnosticsWriter, EnergyLedger, EnergyTerms,
};
use nematic_core::transport::GradientGrowth;
use nematic_core::verification::{advance, compatibility_residual, CompatibilityMode};
use nematic_core::{DensityBounds, Error, FlowState, Result, Solver};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const RESOLVED_CONFIG_FILE: &str = "config.resolved.ini";
pub const SNAPSHOT_DIR: &str = "snapshots";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    /// Reached the horizon.
    Completed,
    /// A sup norm became non-finite or exceeded `blowup_cap`.
    Blowup,
    /// Stopped by a numerical failure other than blow-up.
    Failed,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::Blowup => "blowup",
            RunStatus::Failed => "failed",
        }
    }

    /// 0 on a clean horizon, 2 otherwise.
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Completed => 0,
            RunStatus::Blowup | RunStatus::Failed => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallnessSummary {
    pub verdict: String,
    pub c0: f64,
    pub h1_level: f64,
    pub eps0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilitySummary {
    pub mode: CompatibilityMode,
    /// `‖g₀‖₂` of the initial data.
    pub norm: f64,
    pub violations: usize,
}

/// Worst values seen over all accepted steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantSummary {
    /// `max |Σρ − Σρ₀|/Σρ₀`.
    pub max_mass_drift: f64,
    pub max_rho_excursion: f64,
    pub max_div_u: f64,
    pub max_unit_violation: f64,
    /// Largest one-step increase of `kinetic + λ·elastic`; negative when
    /// every step dissipates.
    pub max_energy_increase: f64,
    pub max_abs_energy_residual: f64,
    pub gradient_growth_ratio: f64,
    pub gradient_growth_bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: RunConfig,
    pub status: RunStatus,
    pub steps: usize,
    pub t_final: f64,
    /// Time of the first state flagged as blown up.
    pub t_star: Option<f64>,
    pub blowup_reason: Option<String>,
    pub failure: Option<String>,
    pub smallness: SmallnessSummary,
    pub compatibility: CompatibilitySummary,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub invariants: InvariantSummary,
    pub ledger: EnergyLedger,
    pub e1: f64,
    pub e2: f64,
    pub e_total: f64,
    pub max_e1: f64,
    /// The stored pressure is `p + λ|∇d|²/2`.
    pub pressure: String,
    pub snapshots: Vec<String>,
}

/// File sinks of a run with an output directory.
struct Outputs {
    dir: PathBuf,
    csv: DiagnosticsWriter<BufWriter<File>>,
    snapshots: Vec<String>,
}

impl Outputs {
    fn create(dir: &Path, cfg: &RunConfig) -> Result<Self> {
        std::fs::create_dir_all(dir.join(SNAPSHOT_DIR))?;
        std::fs::write(dir.join(RESOLVED_CONFIG_FILE), cfg.to_ini())?;
        let csv = DiagnosticsWriter::new(BufWriter::new(File::create(dir.join(DIAGNOSTICS_FILE))?));
        Ok(Self {
            dir: dir.to_path_buf(),
            csv,
            snapshots: Vec::new(),
        })
    }

    fn snapshot(&mut self, state: &FlowState, step: usize) -> Result<()> {
        let name = format!("{SNAPSHOT_DIR}/step_{step:06}.snap");
        if self.snapshots.last() != Some(&name) {
            state.to_snapshot().write(&self.dir.join(&name))?;
            self.snapshots.push(name);
        }
        Ok(())
    }
}

fn max_nan(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// Errors that stop a run because of its configuration, reported with
/// exit status 1 rather than as a runtime failure.
pub fn is_config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_) | Error::CompatibilityViolation { .. } | Error::VacuumDegeneracy { .. } | Error::InvalidGrid(_)
    )
}

/// Run `cfg` to its horizon. With `out`, write the diagnostics CSV,
/// snapshots, the resolved config and `summary.json` there.
///
/// `Err` means the run could not start (exit 1) or an output could not be
/// written; blow-up and numerical failures are reported in the summary.
pub fn execute(cfg: &RunConfig, out: Option<&Path>) -> Result<RunSummary> {
    cfg.validate()?;
    let mut state = cfg.initial_state()?;
    let grid = state.grid().clone();
    let compat = compatibility_residual(&state.rho, &state.u, &state.p, &state.d, &cfg.physics)?;
    compat.enforce(cfg.compatibility)?;

    let mut solver = Solver::new(cfg.physics.clone(), &grid)?;
    let bounds = DensityBounds::from_initial(&state.rho)?;
    let mut ledger = EnergyLedger::new(&state)?;
    let mut growth = GradientGrowth::new(&state.rho)?;
    let report0 = invariant_report(&state, &bounds, &cfg.physics);
    let mass0 = report0.mass;
    let terms0 = EnergyTerms::of(&state)?;
    let lambda = cfg.physics.lambda;
    let initial_energy = terms0.total(lambda);

    let mut outputs = out.map(|d| Outputs::create(d, cfg)).transpose()?;
    if let Some(o) = outputs.as_mut() {
        o.snapshot(&state, 0)?;
    }

    let mut inv = InvariantSummary {
        max_mass_drift: 0.0,
        max_rho_excursion: report0.rho_excursion,
        max_div_u: 0.0,
        max_unit_violation: report0.max_unit_violation,
        max_energy_increase: f64::NEG_INFINITY,
        max_abs_energy_residual: 0.0,
        gradient_growth_ratio: 1.0,
        gradient_growth_bound: 1.0,
    };
    let mut prev_terms = terms0;
    let mut max_e1 = ledger.e1();
    let mut t_star = None;
    let mut blowup_reason = None;
    let mut steps = 0usize;
    let every = cfg.run.snapshot_every;

    let result = advance(&mut solver, &mut state, cfg.run.horizon, &[], |s, info| {
        steps += 1;
        let report = invariant_report(s, &bounds, &cfg.physics);
        if report.blowup_flag {
            t_star = Some(s.t);
            blowup_reason = report.blowup_reason.clone();
        }
        // flagged states still get their row, then the run stops
        let terms = if report.blowup_flag {
            None
        } else {
            match EnergyTerms::of(s) {
                Ok(t) => Some(t),
                Err(e) if e.is_blowup() => {
                    t_star = Some(s.t);
                    blowup_reason = Some(e.to_string());
                    None
                }
                Err(e) => return Err(e),
            }
        };
        let terms = match terms {
            Some(t) => t,
            None => {
                let nan = EnergyTerms {
                    kinetic: f64::NAN,
                    elastic: f64::NAN,
                    dissipation_u: f64::NAN,
                    dissipation_d: f64::NAN,
                    quartic: f64::NAN,
                };
                if let Some(o) = outputs.as_mut() {
                    let mut rec = DiagnosticsRecord::assemble(s, &nan, None, &report, &ledger, &cfg.physics);
                    rec.blowup_flag = true;
                    o.csv.write(&rec)?;
                }
                return Err(Error::BlowUp {
                    field: "state".into(),
                    reason: blowup_reason.clone().unwrap_or_default(),
                });
            }
        };
        ledger.update(s, info.dt)?;
        growth.update(&s.rho, &s.u, info.dt)?;
        let rec = DiagnosticsRecord::assemble(s, &terms, Some((&prev_terms, info.dt)), &report, &ledger, &cfg.physics);

        inv.max_mass_drift = max_nan(inv.max_mass_drift, (report.mass - mass0).abs() / mass0.abs().max(f64::MIN_POSITIVE));
        inv.max_rho_excursion = max_nan(inv.max_rho_excursion, report.rho_excursion);
        inv.max_div_u = max_nan(inv.max_div_u, report.max_div_u);
        inv.max_unit_violation = max_nan(inv.max_unit_violation, report.max_unit_violation);
        inv.max_energy_increase = max_nan(inv.max_energy_increase, terms.total(lambda) - prev_terms.total(lambda));
        inv.max_abs_energy_residual = max_nan(inv.max_abs_energy_residual, rec.energy_identity_residual.abs());
        max_e1 = max_nan(max_e1, ledger.e1());
        prev_terms = terms;

        if let Some(o) = outputs.as_mut() {
            o.csv.write(&rec)?;
            if steps % every == 0 {
                o.snapshot(s, steps)?;
            }
        }
        Ok(())
    });

    let (status, failure) = match result {
        Ok(_) => (RunStatus::Completed, None),
        Err(e) if e.is_blowup() => {
            if t_star.is_none() {
                t_star = Some(state.t);
                blowup_reason = Some(e.to_string());
            }
            (RunStatus::Blowup, None)
        }
        Err(e) if is_config_error(&e) => return Err(e),
        Err(e) => (RunStatus::Failed, Some(e.to_string())),
    };
    if inv.max_energy_increase == f64::NEG_INFINITY {
        inv.max_energy_increase = 0.0;
    }
    inv.gradient_growth_ratio = growth.ratio();
    inv.gradient_growth_bound = growth.bound();

    let mut snapshots = Vec::new();
    if let Some(mut o) = outputs {
        o.csv.flush()?;
        // last state reached, flagged or not
        o.snapshot(&state, steps)?;
        snapshots = o.snapshots;
    }

    let final_energy = EnergyTerms::of(&state).map(|t| t.total(lambda)).unwrap_or(f64::NAN);
    let summary = RunSummary {
        config: cfg.clone(),
        status,
        steps,
        t_final: state.t,
        t_star,
        blowup_reason,
        failure,
        smallness: SmallnessSummary {
            verdict: smallness_check(ledger.c0, ledger.h1_level, grid.dim(), cfg.physics.eps0)
                .as_str()
                .to_string(),
            c0: ledger.c0,
            h1_level: ledger.h1_level,
            eps0: cfg.physics.eps0,
        },
        compatibility: CompatibilitySummary {
            mode: cfg.compatibility,
            norm: compat.norm,
            violations: compat.violations.len(),
        },
        initial_energy,
        final_energy,
        invariants: inv,
        e1: ledger.e1(),
        e2: ledger.e2(),
        e_total: ledger.e_total(),
        max_e1,
        ledger,
        pressure: "effective".into(),
        snapshots,
    };
    if let Some(dir) = out {
        let text = serde_json::to_string_pretty(&summary)
            .map_err(|e| Error::InternalScheme(format!("summary serialisation failed: {e}")))?;
        std::fs::write(dir.join(SUMMARY_FILE), text)?;
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> RunConfig {
        RunConfig::parse(text).unwrap()
    }

    #[test]
    fn equilibrium_run_is_clean() {
        let c = cfg("[grid]\ncells = 8\n[initial]\nkind = equilibrium\n[run]\nsteps = 100\n");
        let s = execute(&c, None).unwrap();
        assert_eq!(s.status, RunStatus::Completed);
        assert_eq!(s.steps, 100);
        assert!((s.final_energy - s.initial_energy).abs() <= 1e-12);
        assert_eq!(s.smallness.c0, 0.0);
        assert_eq!(s.smallness.verdict, "satisfied_n2");
    }

    #[test]
    fn tiny_blowup_cap_flags_the_first_step() {
        let c = cfg(
            "[grid]\ncells = 8\n[physics]\nblowup_cap = 0.5\n[initial]\nkind = taylor_green\n[run]\nsteps = 5\n",
        );
        let s = execute(&c, None).unwrap();
        assert_eq!(s.status, RunStatus::Blowup);
        assert_eq!(s.steps, 1);
        assert!(s.t_star.is_some());
        assert!(s.blowup_reason.as_deref().unwrap().contains("blowup_cap"));
    }

    #[test]
    fn outputs_have_one_row_per_step_and_bracketing_snapshots() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg("[grid]\ncells = 8\n[initial]\nkind = taylor_green\namplitude = 0.1\n[run]\nsteps = 7\nsnapshot_every = 3\n");
        let s = execute(&c, Some(dir.path())).unwrap();
        let csv = std::fs::read_to_string(dir.path().join(DIAGNOSTICS_FILE)).unwrap();
        assert_eq!(csv.lines().count(), 1 + 7);
        assert_eq!(
            s.snapshots,
            ["snapshots/step_000000.snap", "snapshots/step_000003.snap", "snapshots/step_000006.snap", "snapshots/step_000007.snap"]
        );
        for f in [SUMMARY_FILE, RESOLVED_CONFIG_FILE] {
            assert!(dir.path().join(f).exists());
        }
    }

    #[test]
    fn vacuum_data_is_rejected_unless_warned() {
        let base = "[grid]\ncells = 16\nboundary = box\n[physics]\nviscosity = implicit\n[initial]\nkind = vacuum_bump\namplitude = 0.1\n";
        let e = execute(&cfg(&format!("{base}[run]\nsteps = 1\n")), None).unwrap_err();
        assert!(is_config_error(&e), "{e}");
        let s = execute(&cfg(&format!("{base}compatibility = warn\n[run]\nsteps = 1\n")), None).unwrap();
        assert_eq!(s.status, RunStatus::Completed);
        assert!(s.compatibility.violations > 0);
    }
}
