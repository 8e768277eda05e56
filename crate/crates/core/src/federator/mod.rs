//! Federated evaluation: rules are split into per-stream subqueries that
//! run on the nodes owning the streams, with a root rule joining their
//! rows. Nodes talk a line-based protocol over in-process channels or TCP.

mod harness;
mod node;
mod plan;
pub mod protocol;
mod transport;

pub use harness::{
    compare, parse_topology, parse_trace, run_federated, run_monolithic, FederatedRun, Federation, TickOutput,
    Topology, Trace, Verdict,
};
pub use node::{NodeHandle, NodeOutput, NodeStats, RootSetup, Subscription};
pub use plan::{
    column_predicate, row_predicate, Endpoint, Fragment, NodeDescriptor, NodeId, PlanError, QueryPlan, Registry,
    Rewriter,
};
pub use protocol::{Frame, FrameError, SubId};
pub use transport::{RetryPolicy, TransportError};

use crate::ql::RuleError;
use crate::runtime::RuntimeError;

#[derive(Debug, thiserror::Error)]
pub enum FederationError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Rules(#[from] RuleError),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error("node {node} rejected subscription {id}: {reason}")]
    Rejected { node: NodeId, id: SubId, reason: String },
    #[error("unknown subscription {0}")]
    UnknownSubscription(SubId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("node {0} has stopped")]
    NodeStopped(NodeId),
    #[error("timed out: {0}")]
    Timeout(String),
    #[error("node {node} cannot listen on {endpoint}: {reason}")]
    Bind { node: NodeId, endpoint: String, reason: String },
    #[error("topology line {line}: {message}")]
    Topology { line: usize, message: String },
    #[error("trace line {line}: {message}")]
    Trace { line: usize, message: String },
}

impl FederationError {
    /// A peer could not be reached (or could not come up).
    pub fn is_unreachable(&self) -> bool {
        matches!(
            self,
            FederationError::Transport(TransportError::Unreachable { .. }) | FederationError::Bind { .. }
        )
    }
}
