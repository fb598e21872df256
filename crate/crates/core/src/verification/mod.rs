//! Independent oracles and comparison drivers: compatibility of initial
//! data, manufactured solutions, vacuum approximation and twin runs.

mod compat;
mod distance;
mod mms;
mod stencil;
mod suite;
mod table;
mod twin;
mod vacuum;

pub use compat::{
    compatibility_residual, momentum_residual, CompatibilityMode, CompatibilityReport, DELTA_G, VACUUM_LHS_TOL,
    VACUUM_RHO,
};
pub use distance::{uniqueness_distance, Distance};
pub use mms::{
    mms_run, mms_run_parallel, FieldOrders, ManufacturedSolution, MmsCase, MmsLevel, MmsTable, MMS_DT_COEFF,
    MMS_HORIZON, MMS_MIN_ORDER,
};
pub use suite::{run_suite, SuiteOptions, SuiteReport, SuiteRow};
pub use table::{config_hash, TableWriter};
pub use twin::{twin_run_divergence, Perturbation, TwinReport, TwinSample};
pub use vacuum::{vacuum_approx_compare, VacuumPair, VacuumTable, VACUUM_NOISE_FLOOR};

use serde::{Deserialize, Serialize};

use crate::dynamics::{Solver, StepInfo};
use crate::error::{Error, Result};
use crate::state::FlowState;

/// Length of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    Time(f64),
    Steps(usize),
}

/// Relative slack for landing exactly on a stop time.
const TIME_SLACK: f64 = 1e-12;

/// Advance `state` to the horizon, landing exactly on each of the sorted
/// `stops` (time horizons only). `on_step` sees every accepted state.
pub fn advance(
    solver: &mut Solver,
    state: &mut FlowState,
    horizon: Horizon,
    stops: &[f64],
    mut on_step: impl FnMut(&FlowState, &StepInfo) -> Result<()>,
) -> Result<usize> {
    let mut steps = 0;
    match horizon {
        Horizon::Steps(n) => {
            for _ in 0..n {
                let dt = solver.choose_dt(state, f64::INFINITY)?;
                let info = solver.step(state, dt)?;
                on_step(state, &info)?;
                steps += 1;
            }
        }
        Horizon::Time(t_end) => {
            if !(t_end.is_finite() && t_end >= state.t) {
                return Err(Error::Precondition(format!(
                    "horizon {t_end} precedes the state time {}",
                    state.t
                )));
            }
            let slack = TIME_SLACK * t_end.abs().max(1.0);
            while state.t < t_end - slack {
                let target = stops
                    .iter()
                    .copied()
                    .find(|s| *s > state.t + slack && *s <= t_end)
                    .unwrap_or(t_end);
                let dt = solver.choose_dt(state, target - state.t)?;
                let info = solver.step(state, dt)?;
                if (state.t - target).abs() <= slack {
                    state.t = target;
                }
                on_step(state, &info)?;
                steps += 1;
            }
        }
    }
    Ok(steps)
}
