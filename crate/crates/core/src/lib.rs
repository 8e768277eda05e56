//! Semantic stream fusion: windowed, negation-capable construct rules over
//! RDF-star streams, weighted association of hypotheses, declarative
//! tracking-by-detection, soft-rule weight learning and query federation.

pub mod rdf;
pub mod ql;
pub mod geom;
pub mod runtime;
pub mod fusion;
pub mod tracker;
pub mod learner;
pub mod federator;
pub mod config;
