use thiserror::Error;

use crate::rdf::{Iri, StreamId, Tick};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuntimeError {
    #[error("stream {0} is already registered")]
    DuplicateStream(StreamId),
    #[error("stream {0} is not registered")]
    UnknownStream(StreamId),
    #[error("rule {rule} reads unregistered stream {stream}")]
    RuleStreamMissing { rule: Iri, stream: StreamId },
    #[error("out-of-order fact on {stream}: timestamp {got} after {last}")]
    OutOfOrder { stream: StreamId, last: Tick, got: Tick },
    #[error("tick {got} does not follow evaluated tick {last}")]
    TickRegression { last: Tick, got: Tick },
    #[error("rules are not stratifiable: cycle through negation or resolution among {}", fmt_ids(.0))]
    NotStratifiable(Vec<Iri>),
}

fn fmt_ids(ids: &[Iri]) -> String {
    ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(", ")
}
