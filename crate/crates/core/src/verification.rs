//! Machine checks of the BIC-B properties: budget balance, equal non-router
//! charges, the ex-post individual rationality threshold, and brute-force
//! Bayesian incentive compatibility on small discrete instances.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::allocation::{allocation_of, AllocationRule};
use crate::error::{IcbError, Result};
use crate::graph::{CostProfile, NetworkModel, NodeId};
use crate::payments::{
    bicb_payments, bicb_payments_direct, discrete_supports, enumerate_profiles, ir_threshold,
    router_utility,
};

pub const BUDGET_TOLERANCE: f64 = 1e-9;
pub const IC_TOLERANCE: f64 = 1e-9;
pub const MAX_BIC_NODES: usize = 5;
pub const MAX_BIC_TYPES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Budget {
        payments: Vec<f64>,
        sum: f64,
    },
    NonRouter {
        node: NodeId,
        payment: f64,
        reference: f64,
    },
    ClosedForm {
        node: NodeId,
        closed_form: f64,
        direct: f64,
    },
    Bayesian {
        node: NodeId,
        true_type: f64,
        misreport: f64,
        truthful_utility: f64,
        misreport_utility: f64,
    },
    IndividualRationality {
        node: NodeId,
        announced: f64,
        threshold: f64,
        utility: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub property: String,
    pub passed: bool,
    pub witness: Option<Witness>,
    pub instances_checked: usize,
}

impl PropertyReport {
    fn pass(property: &str, instances_checked: usize) -> Self {
        PropertyReport {
            property: property.to_string(),
            passed: true,
            witness: None,
            instances_checked,
        }
    }

    fn fail(property: &str, witness: Witness, instances_checked: usize) -> Self {
        PropertyReport {
            property: property.to_string(),
            passed: false,
            witness: Some(witness),
            instances_checked,
        }
    }

    /// Folds several reports of the same property into one; the first
    /// failure wins.
    pub fn merge(property: &str, reports: impl IntoIterator<Item = PropertyReport>) -> Self {
        let mut total = 0;
        for r in reports {
            total += r.instances_checked;
            if !r.passed {
                return PropertyReport {
                    property: property.to_string(),
                    instances_checked: total,
                    ..r
                };
            }
        }
        PropertyReport::pass(property, total)
    }
}

/// Passes iff the BIC-B transfers sum to zero within 1e-9.
pub fn check_budget_balance(net: &NetworkModel, routers: &BTreeSet<NodeId>) -> PropertyReport {
    let payments = bicb_payments(net, routers);
    let sum: f64 = payments.iter().sum();
    if sum.abs() <= BUDGET_TOLERANCE {
        PropertyReport::pass("budget_balance", 1)
    } else {
        PropertyReport::fail("budget_balance", Witness::Budget { payments, sum }, 1)
    }
}

/// Passes iff every non-router is charged the same amount, that amount is
/// strictly negative when routers exist, and the closed-form transfers agree
/// with the term-by-term evaluation.
pub fn check_nonrouter_payments(net: &NetworkModel, routers: &BTreeSet<NodeId>) -> PropertyReport {
    const NAME: &str = "nonrouter_payments";
    let payments = bicb_payments(net, routers);
    let direct = bicb_payments_direct(net, routers);
    for node in net.nodes() {
        let (closed_form, d) = (payments[node.0], direct[node.0]);
        if (closed_form - d).abs() > BUDGET_TOLERANCE {
            return PropertyReport::fail(
                NAME,
                Witness::ClosedForm {
                    node,
                    closed_form,
                    direct: d,
                },
                1,
            );
        }
    }
    let mut nonrouters = net.nodes().filter(|v| !routers.contains(v));
    let Some(first) = nonrouters.next() else {
        return PropertyReport::pass(NAME, 1);
    };
    let reference = payments[first.0];
    if !routers.is_empty() && reference >= 0.0 {
        return PropertyReport::fail(
            NAME,
            Witness::NonRouter {
                node: first,
                payment: reference,
                reference: 0.0,
            },
            1,
        );
    }
    for node in nonrouters {
        if payments[node.0] != reference {
            return PropertyReport::fail(
                NAME,
                Witness::NonRouter {
                    node,
                    payment: payments[node.0],
                    reference,
                },
                1,
            );
        }
    }
    PropertyReport::pass(NAME, 1)
}

/// Passes iff, for every router, non-negative realized utility coincides with
/// the announced cost being at most `n/(n-1) E[θ_i]`. At the boundary the
/// utility may be within 1e-9 of zero on either side.
pub fn check_expost_ir(
    net: &NetworkModel,
    routers: &BTreeSet<NodeId>,
    announced: &CostProfile,
) -> Result<PropertyReport> {
    const NAME: &str = "expost_ir";
    for &node in routers {
        let utility = router_utility(net, routers, announced, node)?;
        let threshold = ir_threshold(net, node);
        let predicate = announced[node] <= threshold;
        let consistent = if utility.abs() <= IC_TOLERANCE {
            (announced[node] - threshold).abs() <= IC_TOLERANCE * threshold.max(1.0)
        } else {
            (utility > 0.0) == predicate
        };
        if !consistent {
            return Ok(PropertyReport::fail(
                NAME,
                Witness::IndividualRationality {
                    node,
                    announced: announced[node],
                    threshold,
                    utility,
                },
                1,
            ));
        }
    }
    Ok(PropertyReport::pass(NAME, 1))
}

/// Brute-force Bayesian incentive compatibility of BIC-B under `rule`.
///
/// For every node, true type and misreport, the expected utility of truth
/// (others truthful, expectation over their priors, allocation recomputed per
/// announced profile) must be at least that of the misreport, less 1e-9.
/// Utility is `t_i(announced) - θ_i k_i(announced)` with `θ_i` the true cost.
/// The first failing (node, true type, misreport) in lexicographic order is
/// reported.
pub fn check_bayesian_ic(net: &NetworkModel, rule: AllocationRule) -> Result<PropertyReport> {
    const NAME: &str = "bayesian_ic";
    let n = net.n();
    if n > MAX_BIC_NODES {
        return Err(IcbError::InstanceTooLarge(format!(
            "Bayesian IC check supports at most {MAX_BIC_NODES} nodes, got {n}"
        )));
    }
    let supports = discrete_supports(net, MAX_BIC_TYPES)?;
    let profiles = enumerate_profiles(&supports);

    // Outcome of every announced profile, keyed by position in `profiles`.
    let mut payments = Vec::with_capacity(profiles.len());
    let mut forwards = Vec::with_capacity(profiles.len());
    for (profile, _) in &profiles {
        let announced = CostProfile::new(profile.clone())?;
        let tree = rule.build(net, &announced)?;
        payments.push(bicb_payments(net, tree.routers()));
        forwards.push(allocation_of(&tree, n));
    }

    // Mixed-radix strides: the last node varies fastest.
    let mut strides = vec![1usize; n];
    for i in (0..n.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * supports[i + 1].len();
    }

    for node in net.nodes() {
        let i = node.0;
        let own = &supports[i];
        // Expected utility of announcing own[r] with true cost `cost`.
        let expected = |r: usize, cost: f64| -> f64 {
            let mut eu = 0.0;
            for (idx, (_, prob)) in profiles.iter().enumerate() {
                if (idx / strides[i]) % own.len() != r {
                    continue;
                }
                let own_prob = own[r].1;
                if own_prob == 0.0 {
                    continue;
                }
                let others_prob = prob / own_prob;
                let k = if forwards[idx].forwards(node) {
                    cost
                } else {
                    0.0
                };
                eu += others_prob * (payments[idx][i] - k);
            }
            eu
        };
        for (truth, &(true_type, p_true)) in own.iter().enumerate() {
            if p_true == 0.0 {
                continue;
            }
            let honest = expected(truth, true_type);
            for (lie, &(misreport, _)) in own.iter().enumerate() {
                if lie == truth {
                    continue;
                }
                let deviated = expected(lie, true_type);
                if honest < deviated - IC_TOLERANCE {
                    return Ok(PropertyReport::fail(
                        NAME,
                        Witness::Bayesian {
                            node,
                            true_type,
                            misreport,
                            truthful_utility: honest,
                            misreport_utility: deviated,
                        },
                        1,
                    ));
                }
            }
        }
    }
    Ok(PropertyReport::pass(NAME, 1))
}
