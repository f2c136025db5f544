//! Mediator round and table-driven broadcast execution.
//!
//! The mediator collects announced costs, runs the mechanism and hands every
//! node an internal table row for the source: whom to forward to and what to
//! pay or receive. Nodes then forward purely by table lookup, and all money
//! is settled on the mediator's ledger.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;

use crate::allocation::AllocationRule;
use crate::error::{IcbError, Result};
use crate::graph::{CostProfile, NetworkModel, NodeId};
use crate::payments::{run_mechanism, Mechanism};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InternalTableEntry {
    pub source_id: NodeId,
    /// Tree children to forward to; empty for nodes that do not forward.
    pub node_list: Vec<NodeId>,
    /// Positive: received from the mediator; negative: owed to it.
    pub payment: f64,
}

/// One node's table, one row per broadcast source.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InternalTable {
    rows: BTreeMap<NodeId, InternalTableEntry>,
}

impl InternalTable {
    pub fn install(&mut self, entry: InternalTableEntry) {
        self.rows.insert(entry.source_id, entry);
    }

    pub fn lookup(&self, source: NodeId) -> Option<&InternalTableEntry> {
        self.rows.get(&source)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Entries issued by one mediator round, keyed by node.
pub type RoundTables = BTreeMap<NodeId, InternalTableEntry>;

/// Runs the mechanism for the network's source and issues one entry per node.
pub fn mediator_round(
    net: &NetworkModel,
    announced: &CostProfile,
    mechanism: Mechanism,
    rule: AllocationRule,
) -> Result<RoundTables> {
    let outcome = run_mechanism(net, announced, mechanism, rule)?;
    let source = net.source();
    Ok(net
        .nodes()
        .map(|v| {
            let entry = InternalTableEntry {
                source_id: source,
                node_list: outcome.srbt.children(v),
                payment: outcome.payments[v.0],
            };
            (v, entry)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForwardEvent {
    pub from: NodeId,
    pub to: NodeId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BroadcastTrace {
    pub delivery_order: Vec<ForwardEvent>,
    /// Net money per node after settlement.
    pub ledger: Vec<f64>,
    pub packets_received: Vec<usize>,
}

impl BroadcastTrace {
    pub fn ledger_sum(&self) -> f64 {
        self.ledger.iter().sum()
    }

    /// Events as `{"from": u, "to": v}` lines followed by ledger lines
    /// `{"node": i, "net": x}`; ids are 1-based.
    pub fn to_json_lines(&self) -> String {
        #[derive(Serialize)]
        struct LedgerLine {
            node: NodeId,
            net: f64,
        }
        let mut out = String::new();
        for event in &self.delivery_order {
            let _ = writeln!(
                out,
                "{}",
                serde_json::to_string(event).expect("event serializes")
            );
        }
        for (i, &net) in self.ledger.iter().enumerate() {
            let line = LedgerLine {
                node: NodeId(i),
                net,
            };
            let _ = writeln!(
                out,
                "{}",
                serde_json::to_string(&line).expect("ledger serializes")
            );
        }
        out
    }
}

/// Simulates the broadcast from the network's source by table lookup.
///
/// Fails with `DeliveryFailure` when a table forwards over a non-existent
/// link, lacks a row for a node holding the packet, or leaves a node
/// unreached.
pub fn execute_broadcast(tables: &RoundTables, net: &NetworkModel) -> Result<BroadcastTrace> {
    let n = net.n();
    let source = net.source();
    let mut packets_received = vec![0usize; n];
    let mut delivery_order = Vec::new();
    let mut queue = VecDeque::from([source]);
    let mut holding = vec![false; n];
    holding[source.0] = true;
    while let Some(u) = queue.pop_front() {
        let entry = tables
            .get(&u)
            .filter(|e| e.source_id == source)
            .ok_or(IcbError::DeliveryFailure(u))?;
        for &v in &entry.node_list {
            if v.0 >= n || !net.has_edge(u, v) {
                return Err(IcbError::DeliveryFailure(v));
            }
            delivery_order.push(ForwardEvent { from: u, to: v });
            packets_received[v.0] += 1;
            if !holding[v.0] {
                holding[v.0] = true;
                queue.push_back(v);
            }
        }
    }
    if let Some(missing) = net.nodes().find(|v| !holding[v.0]) {
        return Err(IcbError::DeliveryFailure(missing));
    }
    let ledger = net
        .nodes()
        .map(|v| tables.get(&v).map_or(0.0, |e| e.payment))
        .collect();
    Ok(BroadcastTrace {
        delivery_order,
        ledger,
        packets_received,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_network, TypeSpace};

    fn fixture() -> (NetworkModel, CostProfile) {
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
        .unwrap();
        (net, CostProfile::new(vec![10.0, 15.0, 13.0, 8.0]).unwrap())
    }

    fn bicb_tables(net: &NetworkModel, theta: &CostProfile) -> RoundTables {
        mediator_round(net, theta, Mechanism::BicB, AllocationRule::LcpTree).unwrap()
    }

    #[test]
    fn fixture_tables() {
        let (net, theta) = fixture();
        let tables = bicb_tables(&net, &theta);
        let two = &tables[&NodeId(1)];
        assert_eq!(two.node_list, vec![NodeId(2)]);
        assert!((two.payment - 11.33).abs() < 0.01);
        let four = &tables[&NodeId(3)];
        assert!(four.node_list.is_empty());
        assert!((four.payment + 9.33).abs() < 0.01);
        let src = &tables[&NodeId(0)];
        assert_eq!(src.node_list, vec![NodeId(1)]);
        assert!(src.payment < 0.0);
        assert!(tables.values().all(|e| e.source_id == NodeId(0)));
    }

    #[test]
    fn fixture_broadcast() {
        let (net, theta) = fixture();
        let trace = execute_broadcast(&bicb_tables(&net, &theta), &net).unwrap();
        let events: Vec<_> = trace
            .delivery_order
            .iter()
            .map(|e| (e.from.display_id(), e.to.display_id()))
            .collect();
        assert_eq!(events, vec![(1, 2), (2, 3), (3, 4)]);
        assert_eq!(trace.packets_received, vec![0, 1, 1, 1]);
        assert!(trace.ledger_sum().abs() < 1e-9);
    }

    #[test]
    fn star_broadcast() {
        let net = build_network(
            4,
            &[(0, 1), (0, 2), (0, 3)],
            0,
            vec![TypeSpace::Uniform { lo: 1.0, hi: 5.0 }; 4],
        )
        .unwrap();
        let theta = CostProfile::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let tables = bicb_tables(&net, &theta);
        for v in 1..4 {
            let e = &tables[&NodeId(v)];
            assert!(e.node_list.is_empty());
            assert_eq!(e.payment, 0.0);
        }
        let trace = execute_broadcast(&tables, &net).unwrap();
        assert_eq!(trace.delivery_order.len(), 3);
        assert!(trace.delivery_order.iter().all(|e| e.from == NodeId(0)));
    }

    #[test]
    fn emptied_node_list_fails_delivery() {
        let (net, theta) = fixture();
        let mut tables = bicb_tables(&net, &theta);
        tables.get_mut(&NodeId(2)).unwrap().node_list.clear();
        assert_eq!(
            execute_broadcast(&tables, &net),
            Err(IcbError::DeliveryFailure(NodeId(3)))
        );
    }

    #[test]
    fn forwarding_over_missing_link_fails() {
        let (net, theta) = fixture();
        let mut tables = bicb_tables(&net, &theta);
        tables
            .get_mut(&NodeId(0))
            .unwrap()
            .node_list
            .push(NodeId(3));
        assert_eq!(
            execute_broadcast(&tables, &net),
            Err(IcbError::DeliveryFailure(NodeId(3)))
        );
    }

    #[test]
    fn dsicb_round_needs_biconnected() {
        let (net, theta) = fixture();
        assert_eq!(
            mediator_round(&net, &theta, Mechanism::DsicB, AllocationRule::LcpTree),
            Err(IcbError::NotBiconnected)
        );
    }

    #[test]
    fn table_keeps_rows_per_source() {
        let (net, theta) = fixture();
        let tables = bicb_tables(&net, &theta);
        let mut table = InternalTable::default();
        table.install(tables[&NodeId(1)].clone());
        table.install(InternalTableEntry {
            source_id: NodeId(3),
            node_list: vec![NodeId(0)],
            payment: 1.0,
        });
        assert_eq!(table.len(), 2);
        assert_eq!(table.lookup(NodeId(0)).unwrap().node_list, vec![NodeId(2)]);
        assert!(table.lookup(NodeId(2)).is_none());
    }

    #[test]
    fn json_lines_export() {
        let (net, theta) = fixture();
        let trace = execute_broadcast(&bicb_tables(&net, &theta), &net).unwrap();
        let text = trace.to_json_lines();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(r#"{"from":1,"to":2}"#));
        assert_eq!(text.lines().count(), 3 + 4);
        assert!(text
            .lines()
            .nth(3)
            .unwrap()
            .starts_with(r#"{"node":1,"net":-9.33"#));
    }
}
