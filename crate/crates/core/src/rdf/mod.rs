//! RDF-star terms, timestamped facts, static graphs and the Turtle-star
//! subset used to serialize them.

mod error;
mod fact;
mod graph;
pub(crate) mod lexer;
pub(crate) mod parser;
mod serialize;
mod term;
pub mod vocab;

pub use error::{ParseError, SyntaxError};
pub use fact::{StreamId, Tick, TimestampedFact};
pub use graph::StaticGraph;
pub use parser::{parse_fact_document, parse_prefix_document, parse_prefix_document_with, FactParser, MAX_QUOTE_DEPTH};
pub use serialize::{serialize_fact, serialize_fact_with, serialize_iri, serialize_term};
pub use term::{Datatype, Iri, Literal, Term, Triple};
pub use vocab::PrefixMap;
