//! Independent reference computations used by the integration tests. None of
//! these call into the library's algorithms; they only read the network.

#![allow(dead_code)]

use icb_core::{CostProfile, NetworkModel, NodeId, Srbt};

pub fn adjacency(net: &NetworkModel) -> Vec<Vec<bool>> {
    let n = net.n();
    let mut adj = vec![vec![false; n]; n];
    for (u, v) in net.edges() {
        adj[u.index()][v.index()] = true;
        adj[v.index()][u.index()] = true;
    }
    adj
}

/// Transfers straight from the expected-externality definition: each node's
/// externality is the summed prior mean of the *other* routers, and a node
/// receives the average externality of the others minus its own.
pub fn oracle_payments(means: &[f64], is_router: &[bool]) -> Vec<f64> {
    let n = means.len();
    let xi: Vec<f64> = (0..n)
        .map(|i| {
            let mut s = 0.0;
            for j in 0..n {
                if j != i && is_router[j] {
                    s += means[j];
                }
            }
            s
        })
        .collect();
    (0..n)
        .map(|i| {
            let mut others = 0.0;
            for (j, x) in xi.iter().enumerate() {
                if j != i {
                    others += x;
                }
            }
            others / (n as f64 - 1.0) - xi[i]
        })
        .collect()
}

fn find(uf: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while uf[r] != r {
        r = uf[r];
    }
    let mut y = x;
    while uf[y] != r {
        let next = uf[y];
        uf[y] = r;
        y = next;
    }
    r
}

/// Minimum total router cost over all router sets whose union with the source
/// is connected (checked with union-find) and reaches every node in one hop.
pub fn oracle_optimal_cost(adj: &[Vec<bool>], theta: &[f64], source: usize) -> f64 {
    let n = adj.len();
    let others: Vec<usize> = (0..n).filter(|&v| v != source).collect();
    let mut best = f64::INFINITY;
    for subset in 0u64..(1 << others.len()) {
        let mut in_set = vec![false; n];
        in_set[source] = true;
        let mut cost = 0.0;
        for (bit, &v) in others.iter().enumerate() {
            if subset >> bit & 1 == 1 {
                in_set[v] = true;
                cost += theta[v];
            }
        }
        if cost >= best {
            continue;
        }
        let mut uf: Vec<usize> = (0..n).collect();
        for u in 0..n {
            for v in 0..n {
                if in_set[u] && in_set[v] && adj[u][v] {
                    let (a, b) = (find(&mut uf, u), find(&mut uf, v));
                    uf[a] = b;
                }
            }
        }
        let root = find(&mut uf, source);
        let connected = (0..n)
            .filter(|&v| in_set[v])
            .all(|v| find(&mut uf, v) == root);
        let dominating = (0..n).all(|v| in_set[v] || (0..n).any(|u| in_set[u] && adj[u][v]));
        if connected && dominating {
            best = cost;
        }
    }
    best
}

/// Cheapest simple path relay cost from `s` to `t` (summed costs of the
/// intermediate nodes) by exhaustive depth-first search, never visiting
/// `blocked`. Infinite when no path exists.
pub fn oracle_path_cost(
    adj: &[Vec<bool>],
    theta: &[f64],
    s: usize,
    t: usize,
    blocked: Option<usize>,
) -> f64 {
    fn dfs(
        adj: &[Vec<bool>],
        theta: &[f64],
        u: usize,
        t: usize,
        acc: f64,
        visited: &mut [bool],
        best: &mut f64,
    ) {
        if u == t {
            *best = best.min(acc);
            return;
        }
        for v in 0..adj.len() {
            if adj[u][v] && !visited[v] {
                visited[v] = true;
                let relay = if v == t { 0.0 } else { theta[v] };
                dfs(adj, theta, v, t, acc + relay, visited, best);
                visited[v] = false;
            }
        }
    }
    if blocked == Some(s) || blocked == Some(t) {
        return f64::INFINITY;
    }
    let mut visited = vec![false; adj.len()];
    visited[s] = true;
    if let Some(b) = blocked {
        visited[b] = true;
    }
    let mut best = f64::INFINITY;
    dfs(adj, theta, s, t, 0.0, &mut visited, &mut best);
    best
}

/// Asserts that `tree` is a spanning tree over network edges rooted at the
/// source, that its routers are exactly its internal non-source nodes, and
/// that its cost is their summed cost.
pub fn assert_valid_tree(net: &NetworkModel, theta: &CostProfile, tree: &Srbt) {
    let n = net.n();
    let source = net.source();
    assert!(tree.parent(source).is_none());
    let mut internal = vec![false; n];
    for v in net.nodes().filter(|&v| v != source) {
        let p = tree.parent(v).expect("non-source node has a parent");
        assert!(net.has_edge(p, v), "tree edge {p}-{v} not in the network");
        internal[p.index()] = true;
        // Walking up must reach the source within n steps.
        let mut cur = v;
        let mut steps = 0;
        while let Some(up) = tree.parent(cur) {
            cur = up;
            steps += 1;
            assert!(steps <= n, "cycle in parent map");
        }
        assert_eq!(cur, source);
    }
    let expected: Vec<NodeId> = net
        .nodes()
        .filter(|&v| v != source && internal[v.index()])
        .collect();
    let got: Vec<NodeId> = tree.routers().iter().copied().collect();
    assert_eq!(got, expected);
    let cost: f64 = expected.iter().map(|&v| theta[v]).sum();
    assert!((tree.tree_cost() - cost).abs() <= 1e-9);
}
