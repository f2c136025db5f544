//! Incentive compatible broadcast in ad hoc networks with selfish nodes.
//!
//! Routers on a source rooted broadcast tree are compensated by the
//! budget-balanced expected-externality (BIC-B) payment rule; a per-link
//! Clarke payment scheme (DSIC-B) serves as the comparison baseline.

pub mod allocation;
pub mod error;
pub mod experiments;
pub mod fixtures;
pub mod graph;
pub mod mediator;
pub mod payments;
pub mod verification;

pub use allocation::{
    allocation_of, build_srbt, least_cost_paths, optimal_broadcast_tree, Allocation,
    AllocationRule, LeastCostPaths, Srbt,
};
pub use error::{IcbError, Result};
pub use experiments::{
    aggregate, compute_apr, compute_wor, ordering_verdicts, run_experiment, ExperimentConfig,
    ExperimentRecord, SummaryRow,
};
pub use graph::{
    all_profiles, build_network, is_biconnected, mean_cost, random_discrete_network,
    random_network, sample_profiles, CostProfile, NetworkFile, NetworkModel, NodeId, TypeSpace,
};
pub use mediator::{
    execute_broadcast, mediator_round, BroadcastTrace, InternalTable, InternalTableEntry,
    RoundTables,
};
pub use payments::{
    bicb_payments, bicb_payments_direct, dsicb_payments, dsicb_truthfulness_check,
    expected_externalities, find_dominant_strategy_violation, ir_threshold, router_utility,
    run_mechanism, DsicPayments, ExpectedExternality, Mechanism, Outcome,
};
pub use verification::{
    check_bayesian_ic, check_budget_balance, check_expost_ir, check_nonrouter_payments,
    PropertyReport, Witness,
};
