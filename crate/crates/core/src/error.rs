use thiserror::Error;

use crate::graph::NodeId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IcbError {
    #[error("network must have at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("edge ({0}, {1}) references a node outside 0..{2}")]
    NodeOutOfRange(usize, usize, usize),
    #[error("source {0} is not a valid node")]
    InvalidSource(usize),
    #[error("graph is disconnected: {reached} of {n} nodes reachable from the source")]
    DisconnectedGraph { reached: usize, n: usize },
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(NodeId, NodeId),
    #[error("self loop on node {0}")]
    SelfLoop(NodeId),
    #[error("invalid type space for node {node}: {reason}")]
    InvalidTypeSpace { node: usize, reason: String },
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("cost of node {0} must be a positive finite number")]
    InvalidCost(NodeId),
    #[error("invalid generator parameters: {0}")]
    InvalidParameters(String),
    #[error("random network generation failed after {0} attempts")]
    GenerationFailed(usize),
    #[error("instance too large for exhaustive search: {0}")]
    InstanceTooLarge(String),
    #[error("node {0} is not a router")]
    NotARouter(NodeId),
    #[error("graph is not biconnected; the DSIC-B baseline requires a biconnected network")]
    NotBiconnected,
    #[error("instance has no routers")]
    NoRouters,
    #[error("no paying node has a multi-hop least cost path")]
    NoPayers,
    #[error("broadcast did not reach node {0}")]
    DeliveryFailure(NodeId),
    #[error("invalid experiment configuration: {0}")]
    ConfigInvalid(String),
    #[error("empty input")]
    EmptyInput,
    #[error("i/o error: {0}")]
    Io(String),
    #[error("schema error: {0}")]
    Schema(String),
}

pub type Result<T> = std::result::Result<T, IcbError>;
