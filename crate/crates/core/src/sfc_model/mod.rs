//! Steady state of the partially aggregated banks-money-wages economy with
//! `nw` households, one firm and one bank.
//!
//! The accounting and behavioral identities form an underdetermined linear
//! system. Row reduction leaves exactly one constraint on household deposits,
//! `sum_i M_i = k * nw * alpha0 / D`, and every other variable follows from
//! the deposit vector by back-substitution.

mod params;
mod reduce;
mod state;
mod system;

pub use params::{aggregate_output, constant_sum, constant_sum_heterogeneous, IncomeMap, ModelParameters, ParameterFile};
pub use reduce::{reduce, reduce_exact, rref_in_place, ConstantSumRow, ExactReduction, PivotScalar, ReducedSystem, RANK_TOLERANCE};
pub use state::{
    recover_all_variables, verify_balance, verify_balance_heterogeneous, BalanceReport, EconomicState, Identity,
};
pub use system::{column_of, variable_labels, SteadyStateSystem, Variable};

/// Builds the steady-state system for `nw` identical households.
pub fn build_steady_state_system(params: &ModelParameters, nw: usize) -> crate::Result<SteadyStateSystem> {
    SteadyStateSystem::build(params, nw)
}
