//! BIC-B (expected externality) payments and the DSIC-B per-link Clarke baseline.
//!
//! Sign convention: a positive transfer `t_i` means node `i` receives money,
//! a negative one means it pays.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::allocation::{
    allocation_of, least_cost_paths, least_cost_paths_avoiding, Allocation, AllocationRule, Srbt,
    SrbtJson,
};
use crate::error::{IcbError, Result};
use crate::graph::{is_biconnected, CostProfile, NetworkModel, NodeId};

/// Limits for the exhaustive dominant-strategy search.
pub const MAX_DSIC_NODES: usize = 6;
pub const MAX_DSIC_TYPES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mechanism {
    #[serde(rename = "BIC-B")]
    BicB,
    #[serde(rename = "DSIC-B")]
    DsicB,
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mechanism::BicB => "BIC-B",
            Mechanism::DsicB => "DSIC-B",
        })
    }
}

impl FromStr for Mechanism {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "bicb" | "bic-b" => Ok(Mechanism::BicB),
            "dsicb" | "dsic-b" => Ok(Mechanism::DsicB),
            other => Err(format!(
                "unknown mechanism '{other}' (expected bicb or dsicb)"
            )),
        }
    }
}

/// `xi[j]`: expected summed cost of the routers other than `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedExternality {
    pub xi: Vec<f64>,
}

/// Expected externalities under the prior means. Types are independent, so
/// the expectation over the other nodes' types reduces to a sum of means.
pub fn expected_externalities(
    net: &NetworkModel,
    routers: &BTreeSet<NodeId>,
) -> ExpectedExternality {
    let xi = net
        .nodes()
        .map(|j| {
            routers
                .iter()
                .filter(|&&l| l != j)
                .map(|&l| net.mean_cost(l))
                .sum()
        })
        .collect();
    ExpectedExternality { xi }
}

/// Summed prior mean cost of the router set.
pub fn expected_router_cost(net: &NetworkModel, routers: &BTreeSet<NodeId>) -> f64 {
    routers.iter().map(|&l| net.mean_cost(l)).sum()
}

/// BIC-B transfers, closed form:
/// routers get `(n E[θ_i] - S) / (n - 1)`, everyone else `-S / (n - 1)`.
pub fn bicb_payments(net: &NetworkModel, routers: &BTreeSet<NodeId>) -> Vec<f64> {
    let n = net.n() as f64;
    let s = expected_router_cost(net, routers);
    let t_m = -s / (n - 1.0);
    net.nodes()
        .map(|i| {
            if routers.contains(&i) {
                (n * net.mean_cost(i) - s) / (n - 1.0)
            } else {
                t_m
            }
        })
        .collect()
}

/// BIC-B transfers evaluated term by term:
/// `t_i = (1/(n-1)) Σ_{j≠i} ξ_j − ξ_i`.
pub fn bicb_payments_direct(net: &NetworkModel, routers: &BTreeSet<NodeId>) -> Vec<f64> {
    let ext = expected_externalities(net, routers);
    let n = net.n();
    (0..n)
        .map(|i| {
            let others: f64 = (0..n).filter(|&j| j != i).map(|j| ext.xi[j]).sum();
            others / (n as f64 - 1.0) - ext.xi[i]
        })
        .collect()
}

/// The common transfer of every non-router node.
pub fn nonrouter_payment(net: &NetworkModel, routers: &BTreeSet<NodeId>) -> f64 {
    -expected_router_cost(net, routers) / (net.n() as f64 - 1.0)
}

/// Realized utility of router `i` at its announced cost, crediting the
/// non-router charge it does not pay: `-θ̂_i - t_m + t_i`.
pub fn router_utility(
    net: &NetworkModel,
    routers: &BTreeSet<NodeId>,
    announced: &CostProfile,
    i: NodeId,
) -> Result<f64> {
    if !routers.contains(&i) {
        return Err(IcbError::NotARouter(i));
    }
    let n = net.n() as f64;
    let s = expected_router_cost(net, routers);
    let t_i = (n * net.mean_cost(i) - s) / (n - 1.0);
    let t_m = -s / (n - 1.0);
    Ok(-announced[i] - t_m + t_i)
}

/// Largest announced cost at which a router's realized utility is non-negative.
pub fn ir_threshold(net: &NetworkModel, i: NodeId) -> f64 {
    let n = net.n() as f64;
    n / (n - 1.0) * net.mean_cost(i)
}

/// DSIC-B transfers split into what each node receives and pays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsicPayments {
    pub received: Vec<f64>,
    pub paid: Vec<f64>,
}

impl DsicPayments {
    pub fn net_transfers(&self) -> Vec<f64> {
        self.received
            .iter()
            .zip(&self.paid)
            .map(|(r, p)| r - p)
            .collect()
    }

    /// Money the protocol must inject: `Σ received − Σ paid`.
    pub fn budget_sum(&self) -> f64 {
        self.received.iter().sum::<f64>() - self.paid.iter().sum::<f64>()
    }
}

/// Per-link Clarke payments on a biconnected network.
///
/// Every child `j` of a router `p` is worth `θ̂_p + d_{G∖p}(s, j) − d_G(s, j)` to
/// `p`, which `p` receives. Non-router children pay that amount; routers are
/// not charged as recipients, so the difference is an external subsidy.
/// Children of the source pay nothing.
pub fn dsicb_payments(
    net: &NetworkModel,
    announced: &CostProfile,
    srbt: &Srbt,
) -> Result<DsicPayments> {
    if !is_biconnected(net) {
        return Err(IcbError::NotBiconnected);
    }
    let n = net.n();
    let source = net.source();
    let base = least_cost_paths(net, announced);
    let mut received = vec![0.0; n];
    let mut paid = vec![0.0; n];
    for &p in srbt.routers() {
        debug_assert_ne!(p, source);
        let detour = least_cost_paths_avoiding(net, announced, Some(p));
        for j in srbt.children(p) {
            let clarke = announced[p] + detour.dist[j.0] - base.dist[j.0];
            received[p.0] += clarke;
            if !srbt.is_router(j) {
                paid[j.0] += clarke;
            }
        }
    }
    Ok(DsicPayments { received, paid })
}

/// Result of running one mechanism on one announced profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub mechanism: Mechanism,
    pub srbt: Srbt,
    pub allocation: Allocation,
    /// Signed transfer per node.
    pub payments: Vec<f64>,
    /// Received/paid split, DSIC-B only.
    pub dsic: Option<DsicPayments>,
}

impl Outcome {
    pub fn routers(&self) -> &BTreeSet<NodeId> {
        self.srbt.routers()
    }

    pub fn budget_sum(&self) -> f64 {
        match &self.dsic {
            Some(d) => d.budget_sum(),
            None => self.payments.iter().sum(),
        }
    }

    pub fn to_json(&self) -> OutcomeJson {
        OutcomeJson {
            mechanism: self.mechanism,
            k: self.allocation.as_bits(),
            t: self.payments.clone(),
            routers: self.routers().iter().map(|r| r.display_id()).collect(),
            budget_sum: self.budget_sum(),
            srbt: self.srbt.to_json(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeJson {
    pub mechanism: Mechanism,
    pub k: Vec<u8>,
    pub t: Vec<f64>,
    pub routers: Vec<usize>,
    pub budget_sum: f64,
    pub srbt: SrbtJson,
}

/// Builds the tree with `rule` and applies `mechanism`'s payment rule.
pub fn run_mechanism(
    net: &NetworkModel,
    announced: &CostProfile,
    mechanism: Mechanism,
    rule: AllocationRule,
) -> Result<Outcome> {
    if announced.len() != net.n() {
        return Err(IcbError::LengthMismatch {
            expected: net.n(),
            got: announced.len(),
        });
    }
    let srbt = rule.build(net, announced)?;
    outcome_for_tree(net, announced, mechanism, srbt)
}

pub fn outcome_for_tree(
    net: &NetworkModel,
    announced: &CostProfile,
    mechanism: Mechanism,
    srbt: Srbt,
) -> Result<Outcome> {
    let allocation = allocation_of(&srbt, net.n());
    let (payments, dsic) = match mechanism {
        Mechanism::BicB => (bicb_payments(net, srbt.routers()), None),
        Mechanism::DsicB => {
            let d = dsicb_payments(net, announced, &srbt)?;
            (d.net_transfers(), Some(d))
        }
    };
    Ok(Outcome {
        mechanism,
        srbt,
        allocation,
        payments,
        dsic,
    })
}

/// A profitable unilateral deviation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deviation {
    pub node: NodeId,
    pub true_cost: f64,
    pub misreport: f64,
    /// Announcements of every node when the deviation pays off (node's own
    /// entry holds its true cost).
    pub profile: Vec<f64>,
    pub truthful_utility: f64,
    pub deviation_utility: f64,
}

/// Every profile in the Cartesian product of discrete supports, in
/// lexicographic order with the last node varying fastest. Probabilities are
/// the product of the marginal probabilities.
pub(crate) fn enumerate_profiles(supports: &[Vec<(f64, f64)>]) -> Vec<(Vec<f64>, f64)> {
    let mut out = vec![(Vec::with_capacity(supports.len()), 1.0)];
    for support in supports {
        let mut next = Vec::with_capacity(out.len() * support.len());
        for (prefix, prob) in &out {
            for &(value, p) in support {
                let mut profile = prefix.clone();
                profile.push(value);
                next.push((profile, prob * p));
            }
        }
        out = next;
    }
    out
}

pub(crate) fn discrete_supports(
    net: &NetworkModel,
    max_values: usize,
) -> Result<Vec<Vec<(f64, f64)>>> {
    net.type_spaces()
        .iter()
        .enumerate()
        .map(|(i, ts)| match ts.support() {
            Some(s) if s.len() <= max_values => Ok(s),
            Some(s) => Err(IcbError::InstanceTooLarge(format!(
                "node {} has {} types, limit is {max_values}",
                i + 1,
                s.len()
            ))),
            None => Err(IcbError::InstanceTooLarge(format!(
                "node {} has a continuous type space",
                i + 1
            ))),
        })
        .collect()
}

/// Quasi-linear utility of `node` with true cost `true_cost` when the
/// announced profile is `announced`.
pub(crate) fn realized_utility(
    net: &NetworkModel,
    announced: &CostProfile,
    node: NodeId,
    true_cost: f64,
    mechanism: Mechanism,
    rule: AllocationRule,
) -> Result<f64> {
    let outcome = run_mechanism(net, announced, mechanism, rule)?;
    let cost = if outcome.allocation.forwards(node) {
        true_cost
    } else {
        0.0
    };
    Ok(outcome.payments[node.0] - cost)
}

/// Exhaustive dominant-strategy search: for every node, true type, misreport
/// and announcement of the others, truth must do at least as well. Returns
/// the first profitable deviation found.
pub fn find_dominant_strategy_violation(
    net: &NetworkModel,
    mechanism: Mechanism,
    rule: AllocationRule,
) -> Result<Option<Deviation>> {
    if net.n() > MAX_DSIC_NODES {
        return Err(IcbError::InstanceTooLarge(format!(
            "dominant strategy check supports at most {MAX_DSIC_NODES} nodes, got {}",
            net.n()
        )));
    }
    if mechanism == Mechanism::DsicB && !is_biconnected(net) {
        return Err(IcbError::NotBiconnected);
    }
    let supports = discrete_supports(net, MAX_DSIC_TYPES)?;
    for (profile, _) in enumerate_profiles(&supports) {
        let truthful = CostProfile::new(profile.clone())?;
        for node in net.nodes() {
            let true_cost = profile[node.0];
            let honest = realized_utility(net, &truthful, node, true_cost, mechanism, rule)?;
            for &(misreport, _) in &supports[node.0] {
                if misreport == true_cost {
                    continue;
                }
                let lie = truthful.with_cost(node, misreport);
                let deviated = realized_utility(net, &lie, node, true_cost, mechanism, rule)?;
                if deviated > honest + 1e-9 {
                    return Ok(Some(Deviation {
                        node,
                        true_cost,
                        misreport,
                        profile,
                        truthful_utility: honest,
                        deviation_utility: deviated,
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// True iff truthful reporting is a dominant strategy for every node under
/// the DSIC-B payments. Requires a biconnected network with discrete type
/// spaces of at most four values and at most six nodes.
pub fn dsicb_truthfulness_check(net: &NetworkModel, rule: AllocationRule) -> Result<bool> {
    Ok(find_dominant_strategy_violation(net, Mechanism::DsicB, rule)?.is_none())
}
