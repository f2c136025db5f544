//! Source rooted broadcast trees and the router allocation rule.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{IcbError, Result};
use crate::graph::{CostProfile, NetworkModel, NodeId};

/// Largest network the exhaustive optimal-tree search accepts.
pub const MAX_EXACT_NODES: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct LeastCostPaths {
    /// Sum of announced costs of the intermediate nodes on the best path.
    pub dist: Vec<f64>,
    /// Optimal predecessor; `None` for the source.
    pub parent: Vec<Option<NodeId>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: NodeId,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (dist, node)
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Node-weighted Dijkstra from the source. Ties prefer the smallest predecessor id.
pub fn least_cost_paths(net: &NetworkModel, theta: &CostProfile) -> LeastCostPaths {
    least_cost_paths_avoiding(net, theta, None)
}

/// Least cost paths in the network with `blocked` removed. Nodes that become
/// unreachable keep `dist = +inf` and no parent.
pub fn least_cost_paths_avoiding(
    net: &NetworkModel,
    theta: &CostProfile,
    blocked: Option<NodeId>,
) -> LeastCostPaths {
    let n = net.n();
    let source = net.source();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent: Vec<Option<NodeId>> = vec![None; n];
    let mut done = vec![false; n];
    if blocked == Some(source) {
        return LeastCostPaths { dist, parent };
    }
    if let Some(b) = blocked {
        done[b.0] = true;
    }
    dist[source.0] = 0.0;
    let mut heap = BinaryHeap::from([HeapEntry {
        dist: 0.0,
        node: source,
    }]);
    while let Some(HeapEntry { dist: d, node: u }) = heap.pop() {
        if done[u.0] {
            continue;
        }
        done[u.0] = true;
        let relay = if u == source { 0.0 } else { theta[u] };
        let cand = d + relay;
        for &w in net.neighbors(u) {
            if done[w.0] {
                continue;
            }
            if cand < dist[w.0] {
                dist[w.0] = cand;
                parent[w.0] = Some(u);
                heap.push(HeapEntry {
                    dist: cand,
                    node: w,
                });
            } else if cand == dist[w.0] && parent[w.0].is_some_and(|p| u < p) {
                parent[w.0] = Some(u);
            }
        }
    }
    LeastCostPaths { dist, parent }
}

/// A spanning tree rooted at the broadcast source.
#[derive(Debug, Clone, PartialEq)]
pub struct Srbt {
    parent: Vec<Option<NodeId>>,
    routers: BTreeSet<NodeId>,
    tree_cost: f64,
}

impl Srbt {
    /// Builds a tree from a parent map. Routers are the internal nodes other
    /// than the source.
    pub fn from_parents(parent: Vec<Option<NodeId>>, source: NodeId, theta: &CostProfile) -> Self {
        let routers: BTreeSet<NodeId> = parent
            .iter()
            .flatten()
            .copied()
            .filter(|&p| p != source)
            .collect();
        let tree_cost = routers.iter().map(|&r| theta[r]).sum();
        Srbt {
            parent,
            routers,
            tree_cost,
        }
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v.0]
    }

    pub fn parents(&self) -> &[Option<NodeId>] {
        &self.parent
    }

    pub fn routers(&self) -> &BTreeSet<NodeId> {
        &self.routers
    }

    pub fn is_router(&self, v: NodeId) -> bool {
        self.routers.contains(&v)
    }

    pub fn tree_cost(&self) -> f64 {
        self.tree_cost
    }

    /// Children of `v` in increasing id order.
    pub fn children(&self, v: NodeId) -> Vec<NodeId> {
        self.parent
            .iter()
            .enumerate()
            .filter(|(_, p)| **p == Some(v))
            .map(|(c, _)| NodeId(c))
            .collect()
    }

    /// Sum of announced costs of the routers strictly between the root and `v`.
    pub fn path_cost(&self, v: NodeId, theta: &CostProfile) -> f64 {
        let mut cost = 0.0;
        let mut cur = self.parent[v.0];
        while let Some(p) = cur {
            if self.parent[p.0].is_some() {
                cost += theta[p];
            }
            cur = self.parent[p.0];
        }
        cost
    }

    pub fn to_json(&self) -> SrbtJson {
        SrbtJson {
            parent: self
                .parent
                .iter()
                .enumerate()
                .filter_map(|(c, p)| p.map(|p| (c + 1, p.display_id())))
                .collect(),
            routers: self.routers.iter().map(|r| r.display_id()).collect(),
            cost: self.tree_cost,
        }
    }
}

/// Serialized tree, 1-based ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrbtJson {
    pub parent: BTreeMap<usize, usize>,
    pub routers: Vec<usize>,
    pub cost: f64,
}

/// Shortest path tree over the least cost paths.
pub fn build_srbt(net: &NetworkModel, theta: &CostProfile) -> Srbt {
    let lcp = least_cost_paths(net, theta);
    Srbt::from_parents(lcp.parent, net.source(), theta)
}

/// Exact minimum-cost broadcast tree by enumerating router subsets.
///
/// The router set R* minimises the summed cost subject to `{source} ∪ R*`
/// being connected and dominating every node. Equal-cost sets are resolved
/// toward the lexicographically smallest sorted id list. The tree is the BFS
/// layering from the source that only expands through `{source} ∪ R*`.
pub fn optimal_broadcast_tree(net: &NetworkModel, theta: &CostProfile) -> Result<Srbt> {
    let n = net.n();
    if n > MAX_EXACT_NODES {
        return Err(IcbError::InstanceTooLarge(format!(
            "optimal broadcast tree supports at most {MAX_EXACT_NODES} nodes, got {n}"
        )));
    }
    let source = net.source();
    let others: Vec<NodeId> = net.nodes().filter(|&v| v != source).collect();
    let neighbor_mask: Vec<u32> = net
        .nodes()
        .map(|v| {
            net.neighbors(v)
                .iter()
                .fold(1u32 << v.0, |m, w| m | (1 << w.0))
        })
        .collect();
    let all = (1u32 << n) - 1;

    let mut best: Option<(f64, Vec<NodeId>, u32)> = None;
    for subset in 0u32..(1 << others.len()) {
        let mut backbone = 1u32 << source.0;
        let mut cost = 0.0;
        let mut ids = Vec::new();
        for (bit, &v) in others.iter().enumerate() {
            if subset & (1 << bit) != 0 {
                backbone |= 1 << v.0;
                cost += theta[v];
                ids.push(v);
            }
        }
        if let Some((best_cost, best_ids, _)) = &best {
            match cost.total_cmp(best_cost) {
                Ordering::Greater => continue,
                Ordering::Equal if ids >= *best_ids => continue,
                _ => {}
            }
        }
        let covered = (0..n)
            .filter(|i| backbone & (1 << i) != 0)
            .fold(0u32, |m, i| m | neighbor_mask[i]);
        if covered != all || !mask_connected(backbone, source.0, &neighbor_mask) {
            continue;
        }
        best = Some((cost, ids, backbone));
    }
    let (_, _, backbone) = best.expect("the full node set is always a feasible backbone");

    let mut parent: Vec<Option<NodeId>> = vec![None; n];
    let mut seen = vec![false; n];
    seen[source.0] = true;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        if backbone & (1 << u.0) == 0 {
            continue;
        }
        for &w in net.neighbors(u) {
            if !seen[w.0] {
                seen[w.0] = true;
                parent[w.0] = Some(u);
                queue.push_back(w);
            }
        }
    }
    Ok(Srbt::from_parents(parent, source, theta))
}

fn mask_connected(set: u32, start: usize, neighbor_mask: &[u32]) -> bool {
    let mut reached = 1u32 << start;
    loop {
        let grown = (0..neighbor_mask.len())
            .filter(|i| reached & (1 << i) != 0)
            .fold(reached, |m, i| m | (neighbor_mask[i] & set));
        if grown == reached {
            return reached == set;
        }
        reached = grown;
    }
}

/// Which tree the mechanism uses to pick routers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AllocationRule {
    /// Shortest path tree over node-weighted least cost paths.
    #[default]
    LcpTree,
    /// Exhaustive minimum-cost broadcast tree (small instances only).
    ExactOptimal,
}

impl AllocationRule {
    pub fn build(self, net: &NetworkModel, theta: &CostProfile) -> Result<Srbt> {
        match self {
            AllocationRule::LcpTree => Ok(build_srbt(net, theta)),
            AllocationRule::ExactOptimal => optimal_broadcast_tree(net, theta),
        }
    }
}

impl fmt::Display for AllocationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AllocationRule::LcpTree => "lcp-tree",
            AllocationRule::ExactOptimal => "exact-optimal",
        })
    }
}

impl FromStr for AllocationRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "lcp-tree" | "lcp" => Ok(AllocationRule::LcpTree),
            "exact-optimal" | "optimal" => Ok(AllocationRule::ExactOptimal),
            other => Err(format!(
                "unknown allocation rule '{other}' (expected lcp-tree or exact-optimal)"
            )),
        }
    }
}

/// Forwarding indicator: `k[i]` is true iff node `i` is a router.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    k: Vec<bool>,
}

impl Allocation {
    pub fn k(&self) -> &[bool] {
        &self.k
    }

    pub fn forwards(&self, v: NodeId) -> bool {
        self.k[v.0]
    }

    pub fn as_bits(&self) -> Vec<u8> {
        self.k.iter().map(|&b| u8::from(b)).collect()
    }

    pub fn router_count(&self) -> usize {
        self.k.iter().filter(|&&b| b).count()
    }
}

pub fn allocation_of(srbt: &Srbt, n: usize) -> Allocation {
    let mut k = vec![false; n];
    for r in srbt.routers() {
        k[r.0] = true;
    }
    Allocation { k }
}
