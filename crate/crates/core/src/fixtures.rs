//! Reference instances shared by tests, the CLI demo and benchmarks.

use crate::graph::{build_network, CostProfile, NetworkModel, TypeSpace};

/// Four-node path 1–2–3–4 with source 1, two-point uniform priors
/// {10,11}, {15,16}, {12,13}, {7,8} and announced costs (10, 15, 13, 8).
pub fn worked_example() -> (NetworkModel, CostProfile) {
    let net = build_network(
        4,
        &[(0, 1), (1, 2), (2, 3)],
        0,
        vec![
            TypeSpace::discrete_uniform(&[10.0, 11.0]),
            TypeSpace::discrete_uniform(&[15.0, 16.0]),
            TypeSpace::discrete_uniform(&[12.0, 13.0]),
            TypeSpace::discrete_uniform(&[7.0, 8.0]),
        ],
    )
    .expect("worked example is a valid network");
    let theta = CostProfile::new(vec![10.0, 15.0, 13.0, 8.0]).expect("positive costs");
    (net, theta)
}

/// Reference transfers of the worked example, two decimals.
pub const WORKED_EXAMPLE_PAYMENTS: [f64; 4] = [-9.33, 11.33, 7.33, -9.33];
