use std::io::Write;

use serde::{Deserialize, Serialize};

use super::energy::{residual_from_terms, EnergyTerms};
use super::ledger::EnergyLedger;
use crate::dynamics::SolverConfig;
use crate::error::Result;
use crate::fields::divergence;
use crate::state::FlowState;
use crate::transport::{total_mass, DensityBounds};

/// Outcome of the smallness conditions on the initial data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Smallness {
    SatisfiedN2,
    SatisfiedN3,
    NotSatisfied,
}

impl Smallness {
    pub fn is_satisfied(self) -> bool {
        self != Smallness::NotSatisfied
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Smallness::SatisfiedN2 => "satisfied_n2",
            Smallness::SatisfiedN3 => "satisfied_n3",
            Smallness::NotSatisfied => "not_satisfied",
        }
    }
}

/// `c0 < eps0` in 2D, `c0·h1_level < eps0` in 3D (strict).
pub fn smallness_check(c0: f64, h1_level: f64, dim: usize, eps0: f64) -> Smallness {
    match dim {
        2 if c0 < eps0 => Smallness::SatisfiedN2,
        3 if c0 * h1_level < eps0 => Smallness::SatisfiedN3,
        _ => Smallness::NotSatisfied,
    }
}

/// Pointwise invariants of one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub mass: f64,
    pub min_rho: f64,
    pub max_rho: f64,
    /// Distance of `ρ` outside the initial bounds.
    pub rho_excursion: f64,
    pub max_div_u: f64,
    pub max_unit_violation: f64,
    pub blowup_flag: bool,
    /// Field that triggered the flag, with the reason.
    pub blowup_reason: Option<String>,
}

pub fn invariant_report(state: &FlowState, bounds: &DensityBounds, cfg: &SolverConfig) -> InvariantReport {
    let mut reason: Option<String> = None;
    let mut flag = |name: &str, values: &mut dyn Iterator<Item = f64>| {
        let mut sup = 0.0f64;
        for v in values {
            if !v.is_finite() {
                reason.get_or_insert_with(|| format!("{name}: non-finite value"));
                return;
            }
            sup = sup.max(v.abs());
        }
        if sup > cfg.blowup_cap {
            reason.get_or_insert_with(|| format!("{name}: sup norm {sup:e} exceeds blowup_cap {:e}", cfg.blowup_cap));
        }
    };
    flag("rho", &mut state.rho.values.iter().copied());
    flag("u", &mut state.u.comps.iter().flatten().copied());
    flag("p", &mut state.p.values.iter().copied());
    flag("d", &mut state.d.values.iter().flatten().copied());

    let max_div_u = if reason.is_some() {
        f64::NAN
    } else {
        divergence(&state.u).map(|d| d.max_abs()).unwrap_or(f64::NAN)
    };
    InvariantReport {
        mass: total_mass(&state.rho),
        min_rho: state.rho.min(),
        max_rho: state.rho.max(),
        rho_excursion: bounds.excursion(&state.rho),
        max_div_u,
        max_unit_violation: state.d.max_unit_violation(),
        blowup_flag: reason.is_some(),
        blowup_reason: reason,
    }
}

/// One CSV row per accepted step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub min_rho: f64,
    pub max_rho: f64,
    pub kinetic: f64,
    pub elastic: f64,
    pub dissipation_u: f64,
    pub dissipation_d: f64,
    pub quartic: f64,
    pub energy_identity_residual: f64,
    pub max_div_u: f64,
    pub max_unit_violation: f64,
    #[serde(rename = "E1")]
    pub e1: f64,
    #[serde(rename = "E2")]
    pub e2: f64,
    pub blowup_flag: bool,
}

impl DiagnosticsRecord {
    /// Assemble a row. `prev` carries the energy terms and the step size of
    /// the previous accepted state; without it the residual is `NaN`.
    pub fn assemble(
        state: &FlowState,
        terms: &EnergyTerms,
        prev: Option<(&EnergyTerms, f64)>,
        report: &InvariantReport,
        ledger: &EnergyLedger,
        cfg: &SolverConfig,
    ) -> Self {
        let residual = match prev {
            Some((p, dt)) => residual_from_terms(p, terms, dt, cfg),
            None => f64::NAN,
        };
        Self {
            t: state.t,
            mass: report.mass,
            min_rho: report.min_rho,
            max_rho: report.max_rho,
            kinetic: terms.kinetic,
            elastic: terms.elastic,
            dissipation_u: terms.dissipation_u,
            dissipation_d: terms.dissipation_d,
            quartic: terms.quartic,
            energy_identity_residual: residual,
            max_div_u: report.max_div_u,
            max_unit_violation: report.max_unit_violation,
            e1: ledger.e1(),
            e2: ledger.e2(),
            blowup_flag: report.blowup_flag,
        }
    }
}

/// Streaming CSV writer for [`DiagnosticsRecord`]s.
pub struct DiagnosticsWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> DiagnosticsWriter<W> {
    pub fn new(w: W) -> Self {
        Self {
            inner: csv::Writer::from_writer(w),
        }
    }

    pub fn write(&mut self, rec: &DiagnosticsRecord) -> Result<()> {
        self.inner.serialize(rec)?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}
