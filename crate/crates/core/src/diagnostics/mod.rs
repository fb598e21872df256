//! Energy functionals, a priori ledgers and per-step invariant reports.

mod energy;
mod ledger;
mod record;

pub use energy::{basic_energy, energy_identity_residual, residual_from_terms, EnergyTerms};
pub use ledger::{
    hessian_sq, third_derivative_sq, EnergyLedger, Integral, LedgerIntegrals, LedgerSups, RateNorms, StaticNorms, Sup,
};
pub use record::{
    invariant_report, smallness_check, DiagnosticsRecord, DiagnosticsWriter, InvariantReport, Smallness,
};
