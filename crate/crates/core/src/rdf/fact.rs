use std::fmt;

use super::term::{Iri, Term, Triple};

/// Logical time point. One tick is `tick_seconds` of stream time.
pub type Tick = u64;

/// A triple observed at a logical time point. Immutable once built.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimestampedFact {
    triple: Triple,
    timestamp: Tick,
}

impl TimestampedFact {
    pub fn new(triple: Triple, timestamp: Tick) -> Self {
        TimestampedFact { triple, timestamp }
    }

    pub fn from_parts(
        subject: impl Into<Term>,
        predicate: Iri,
        object: impl Into<Term>,
        timestamp: Tick,
    ) -> Self {
        Self::new(Triple::new(subject, predicate, object), timestamp)
    }

    pub fn triple(&self) -> &Triple {
        &self.triple
    }

    pub fn subject(&self) -> &Term {
        &self.triple.subject
    }

    pub fn predicate(&self) -> &Iri {
        &self.triple.predicate
    }

    pub fn object(&self) -> &Term {
        &self.triple.object
    }

    pub fn timestamp(&self) -> Tick {
        self.timestamp
    }

    /// Same triple, different time point.
    pub fn at(&self, timestamp: Tick) -> Self {
        TimestampedFact {
            triple: self.triple.clone(),
            timestamp,
        }
    }
}

impl fmt::Display for TimestampedFact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} @{}",
            self.triple.subject, self.triple.predicate, self.triple.object, self.timestamp
        )
    }
}

/// Name of a stream, unique within one engine.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StreamId(pub Iri);

impl StreamId {
    pub fn new(iri: impl AsRef<str>) -> Self {
        StreamId(Iri::new(iri))
    }

    pub fn iri(&self) -> &Iri {
        &self.0
    }
}

impl From<Iri> for StreamId {
    fn from(iri: Iri) -> Self {
        StreamId(iri)
    }
}

impl fmt::Display for StreamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
