//! Node-weighted undirected network model with per-node prior type spaces.
//!
//! Node ids are 0-based internally. Every external format (network JSON,
//! human-readable output) uses 1-based ids.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{IcbError, Result};

const PROB_TOLERANCE: f64 = 1e-12;
const CONNECT_RETRIES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }

    /// 1-based id used in all external representations.
    pub fn display_id(self) -> usize {
        self.0 + 1
    }
}

/// Serialized 1-based, like every other external representation.
impl Serialize for NodeId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u64(self.display_id() as u64)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0 + 1)
    }
}

/// Prior distribution over a node's per-packet forwarding cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TypeSpace {
    Discrete { values: Vec<f64>, probs: Vec<f64> },
    Uniform { lo: f64, hi: f64 },
}

impl TypeSpace {
    /// Discrete type space with equal probability on every value.
    pub fn discrete_uniform(values: &[f64]) -> Self {
        let p = 1.0 / values.len() as f64;
        TypeSpace::Discrete {
            values: values.to_vec(),
            probs: vec![p; values.len()],
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        match self {
            TypeSpace::Discrete { values, probs } => {
                if values.is_empty() {
                    return Err("discrete type space has no values".into());
                }
                if values.len() != probs.len() {
                    return Err(format!(
                        "{} values but {} probabilities",
                        values.len(),
                        probs.len()
                    ));
                }
                if values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
                    return Err("type values must be positive and finite".into());
                }
                if values.windows(2).any(|w| w[0] >= w[1]) {
                    return Err("type values must be strictly increasing".into());
                }
                if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err("probabilities must be non-negative".into());
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > PROB_TOLERANCE {
                    return Err(format!("probabilities sum to {total}, not 1"));
                }
                Ok(())
            }
            TypeSpace::Uniform { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() || *lo <= 0.0 {
                    return Err("uniform bounds must be positive and finite".into());
                }
                if lo >= hi {
                    return Err(format!(
                        "uniform interval requires lo < hi, got [{lo}, {hi}]"
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn mean(&self) -> f64 {
        mean_cost(self)
    }

    /// Support points with their probabilities, for discrete spaces only.
    pub fn support(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            TypeSpace::Discrete { values, probs } => {
                Some(values.iter().copied().zip(probs.iter().copied()).collect())
            }
            TypeSpace::Uniform { .. } => None,
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, TypeSpace::Discrete { .. })
    }

    pub fn contains(&self, cost: f64) -> bool {
        match self {
            TypeSpace::Discrete { values, .. } => values.contains(&cost),
            TypeSpace::Uniform { lo, hi } => (*lo..=*hi).contains(&cost),
        }
    }
}

/// Expected forwarding cost under the prior.
pub fn mean_cost(ts: &TypeSpace) -> f64 {
    match ts {
        TypeSpace::Discrete { values, probs } => values.iter().zip(probs).map(|(v, p)| v * p).sum(),
        TypeSpace::Uniform { lo, hi } => (lo + hi) / 2.0,
    }
}

/// Announced (or true) per-node forwarding costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CostProfile(Vec<f64>);

impl CostProfile {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if let Some(i) = theta.iter().position(|c| !c.is_finite() || *c <= 0.0) {
            return Err(IcbError::InvalidCost(NodeId(i)));
        }
        Ok(CostProfile(theta))
    }

    pub fn for_network(net: &NetworkModel, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != net.n() {
            return Err(IcbError::LengthMismatch {
                expected: net.n(),
                got: theta.len(),
            });
        }
        Self::new(theta)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Same profile with one node's cost replaced.
    pub fn with_cost(&self, node: NodeId, cost: f64) -> Self {
        let mut theta = self.0.clone();
        theta[node.0] = cost;
        CostProfile(theta)
    }
}

impl std::ops::Index<NodeId> for CostProfile {
    type Output = f64;

    fn index(&self, node: NodeId) -> &f64 {
        &self.0[node.0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    adjacency: Vec<Vec<NodeId>>,
    source: NodeId,
    type_spaces: Vec<TypeSpace>,
}

impl NetworkModel {
    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.n()).map(NodeId)
    }

    /// Neighbours in increasing id order.
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v.0]
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.adjacency[u.0].binary_search(&v).is_ok()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for (u, adj) in self.adjacency.iter().enumerate() {
            for &v in adj {
                if u < v.0 {
                    out.push((NodeId(u), v));
                }
            }
        }
        out
    }

    pub fn type_space(&self, v: NodeId) -> &TypeSpace {
        &self.type_spaces[v.0]
    }

    pub fn type_spaces(&self) -> &[TypeSpace] {
        &self.type_spaces
    }

    pub fn mean_cost(&self, v: NodeId) -> f64 {
        mean_cost(&self.type_spaces[v.0])
    }

    /// Same topology and source with different priors.
    pub fn with_type_spaces(&self, type_spaces: Vec<TypeSpace>) -> Result<Self> {
        let edges: Vec<(usize, usize)> =
            self.edges().into_iter().map(|(u, v)| (u.0, v.0)).collect();
        build_network(self.n(), &edges, self.source.0, type_spaces)
    }

    /// Number of nodes reachable from `start` when `blocked` is removed.
    pub(crate) fn reachable_count(&self, start: NodeId, blocked: Option<NodeId>) -> usize {
        let mut seen = vec![false; self.n()];
        if let Some(b) = blocked {
            seen[b.0] = true;
        }
        if seen[start.0] {
            return 0;
        }
        seen[start.0] = true;
        let mut queue = VecDeque::from([start]);
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &w in self.neighbors(u) {
                if !seen[w.0] {
                    seen[w.0] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        self.reachable_count(self.source, None) == self.n()
    }
}

/// Validates and builds a network. Edges and source use 0-based ids.
pub fn build_network(
    n: usize,
    edges: &[(usize, usize)],
    source: usize,
    type_spaces: Vec<TypeSpace>,
) -> Result<NetworkModel> {
    if n < 2 {
        return Err(IcbError::TooFewNodes(n));
    }
    if source >= n {
        return Err(IcbError::InvalidSource(source));
    }
    if type_spaces.len() != n {
        return Err(IcbError::LengthMismatch {
            expected: n,
            got: type_spaces.len(),
        });
    }
    for (node, ts) in type_spaces.iter().enumerate() {
        ts.validate()
            .map_err(|reason| IcbError::InvalidTypeSpace { node, reason })?;
    }
    let mut adjacency: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); n];
    for &(u, v) in edges {
        if u >= n || v >= n {
            return Err(IcbError::NodeOutOfRange(u, v, n));
        }
        if u == v {
            return Err(IcbError::SelfLoop(NodeId(u)));
        }
        if !adjacency[u].insert(NodeId(v)) {
            return Err(IcbError::DuplicateEdge(NodeId(u), NodeId(v)));
        }
        adjacency[v].insert(NodeId(u));
    }
    let net = NetworkModel {
        adjacency: adjacency
            .into_iter()
            .map(|s| s.into_iter().collect())
            .collect(),
        source: NodeId(source),
        type_spaces,
    };
    let reached = net.reachable_count(net.source, None);
    if reached != n {
        return Err(IcbError::DisconnectedGraph { reached, n });
    }
    Ok(net)
}

/// Random G(n, p) network with source 0, uniform priors on `[cost_lo, cost_hi]`
/// and i.i.d. uniform true costs. Fully determined by `rng_seed`.
///
/// Disconnected draws are retried a bounded number of times; after that the
/// last draw is augmented with the edges of a random spanning tree.
pub fn random_network(
    n: usize,
    edge_density: f64,
    cost_lo: f64,
    cost_hi: f64,
    rng_seed: u64,
) -> Result<(NetworkModel, CostProfile)> {
    if n < 2 {
        return Err(IcbError::TooFewNodes(n));
    }
    if !(edge_density > 0.0 && edge_density <= 1.0) {
        return Err(IcbError::InvalidParameters(format!(
            "edge density {edge_density} not in (0, 1]"
        )));
    }
    let prior = TypeSpace::Uniform {
        lo: cost_lo,
        hi: cost_hi,
    };
    prior.validate().map_err(IcbError::InvalidParameters)?;

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut edges = BTreeSet::new();
    let mut connected = false;
    for _ in 0..CONNECT_RETRIES {
        edges = sample_gnp(n, edge_density, &mut rng);
        if edge_set_connected(n, &edges) {
            connected = true;
            break;
        }
    }
    if !connected {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        for i in 1..n {
            let j = rng.gen_range(0..i);
            let (a, b) = (order[i], order[j]);
            edges.insert((a.min(b), a.max(b)));
        }
    }

    let theta: Vec<f64> = (0..n).map(|_| rng.gen_range(cost_lo..=cost_hi)).collect();
    let edges: Vec<(usize, usize)> = edges.into_iter().collect();
    let net = build_network(n, &edges, 0, vec![prior; n])?;
    if !net.is_connected() {
        return Err(IcbError::GenerationFailed(CONNECT_RETRIES));
    }
    Ok((net, CostProfile::new(theta)?))
}

/// Random network whose priors are discrete: every node gets `types_per_node`
/// distinct integer costs from `[cost_lo, cost_hi]` with equal probability.
/// The returned profile draws each node's cost from its own prior.
pub fn random_discrete_network(
    n: usize,
    edge_density: f64,
    types_per_node: usize,
    cost_lo: u32,
    cost_hi: u32,
    rng_seed: u64,
) -> Result<(NetworkModel, CostProfile)> {
    if types_per_node == 0 || cost_hi < cost_lo || cost_hi - cost_lo + 1 < types_per_node as u32 {
        return Err(IcbError::InvalidParameters(format!(
            "cannot draw {types_per_node} distinct costs from [{cost_lo}, {cost_hi}]"
        )));
    }
    let (topology, _) = random_network(
        n,
        edge_density,
        f64::from(cost_lo),
        f64::from(cost_hi) + 1.0,
        rng_seed,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed ^ 0x9e37_79b9_7f4a_7c15);
    let pool: Vec<u32> = (cost_lo..=cost_hi).collect();
    let mut type_spaces = Vec::with_capacity(n);
    let mut theta = Vec::with_capacity(n);
    for _ in 0..n {
        let mut values: Vec<f64> = pool
            .choose_multiple(&mut rng, types_per_node)
            .map(|&v| f64::from(v))
            .collect();
        values.sort_by(f64::total_cmp);
        theta.push(values[rng.gen_range(0..values.len())]);
        type_spaces.push(TypeSpace::discrete_uniform(&values));
    }
    Ok((
        topology.with_type_spaces(type_spaces)?,
        CostProfile::new(theta)?,
    ))
}

/// Every announced profile in the product of discrete priors, or `None` when
/// some prior is continuous or the product exceeds `limit`.
pub fn all_profiles(net: &NetworkModel, limit: usize) -> Option<Vec<CostProfile>> {
    let mut profiles = vec![Vec::with_capacity(net.n())];
    for ts in net.type_spaces() {
        let TypeSpace::Discrete { values, .. } = ts else {
            return None;
        };
        if profiles.len() * values.len() > limit {
            return None;
        }
        profiles = profiles
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut next = p.clone();
                    next.push(v);
                    next
                })
            })
            .collect();
    }
    Some(profiles.into_iter().map(CostProfile).collect())
}

/// `count` profiles drawn independently from the nodes' priors.
pub fn sample_profiles(net: &NetworkModel, count: usize, rng_seed: u64) -> Vec<CostProfile> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    (0..count)
        .map(|_| {
            let theta = net
                .type_spaces()
                .iter()
                .map(|ts| match ts {
                    TypeSpace::Discrete { values, probs } => {
                        let mut u: f64 = rng.gen();
                        let mut pick = values[values.len() - 1];
                        for (v, p) in values.iter().zip(probs) {
                            if u < *p {
                                pick = *v;
                                break;
                            }
                            u -= p;
                        }
                        pick
                    }
                    TypeSpace::Uniform { lo, hi } => rng.gen_range(*lo..=*hi),
                })
                .collect();
            CostProfile(theta)
        })
        .collect()
}

fn sample_gnp(n: usize, p: f64, rng: &mut impl Rng) -> BTreeSet<(usize, usize)> {
    let mut edges = BTreeSet::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if p >= 1.0 || rng.gen::<f64>() < p {
                edges.insert((u, v));
            }
        }
    }
    edges
}

fn edge_set_connected(n: usize, edges: &BTreeSet<(usize, usize)>) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = n;
    for &(u, v) in edges {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            parent[a] = b;
            components -= 1;
        }
    }
    components == 1
}

/// True iff the network has at least 3 nodes and no cut vertex.
pub fn is_biconnected(net: &NetworkModel) -> bool {
    let n = net.n();
    if n < 3 || !net.is_connected() {
        return false;
    }
    // Iterative Hopcroft-Tarjan low-link search from node 0.
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut timer = 0;
    let mut root_children = 0;
    let mut stack: Vec<(usize, usize, usize)> = vec![(0, usize::MAX, 0)];
    disc[0] = 0;
    low[0] = 0;
    timer += 1;
    while let Some(&mut (u, parent, ref mut next)) = stack.last_mut() {
        let adj = &net.adjacency[u];
        if *next < adj.len() {
            let w = adj[*next].0;
            *next += 1;
            if disc[w] == usize::MAX {
                disc[w] = timer;
                low[w] = timer;
                timer += 1;
                if u == 0 {
                    root_children += 1;
                }
                stack.push((w, u, 0));
            } else if w != parent {
                low[u] = low[u].min(disc[w]);
            }
        } else {
            stack.pop();
            if parent != usize::MAX {
                low[parent] = low[parent].min(low[u]);
                if parent != 0 && low[u] >= disc[parent] {
                    return false;
                }
            }
        }
    }
    root_children < 2
}

/// On-disk network description. All ids are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub n: usize,
    pub source: usize,
    pub edges: Vec<[usize; 2]>,
    pub types: Vec<TypeSpace>,
}

impl NetworkFile {
    pub fn from_network(net: &NetworkModel) -> Self {
        NetworkFile {
            n: net.n(),
            source: net.source().display_id(),
            edges: net
                .edges()
                .into_iter()
                .map(|(u, v)| [u.display_id(), v.display_id()])
                .collect(),
            types: net.type_spaces().to_vec(),
        }
    }

    pub fn into_network(self) -> Result<NetworkModel> {
        let to_zero = |id: usize| {
            id.checked_sub(1)
                .ok_or_else(|| IcbError::Schema("node ids are 1-based; found 0".into()))
        };
        let source = to_zero(self.source)?;
        let edges = self
            .edges
            .iter()
            .map(|[u, v]| Ok((to_zero(*u)?, to_zero(*v)?)))
            .collect::<Result<Vec<_>>>()?;
        build_network(self.n, &edges, source, self.types)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| IcbError::Schema(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network file serializes")
    }
}
