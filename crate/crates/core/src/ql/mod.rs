//! The rule language: CONSTRUCT/WHERE queries with STREAM blocks, windows,
//! timestamp bindings, NAF blocks and FILTER expressions, wrapped in SHACL
//! node shapes.

mod analyze;
mod ast;
mod document;
mod error;
mod lexer;
mod parser;
mod printer;

pub use analyze::{analyze_rule, evidence_expr, Occurrences, RuleReport, Safety};
pub use ast::{
    BinOp, BodySpec, Builtin, FilterExpr, PatternTerm, QuotedPattern, Rule, RuleKind, StreamBlock,
    TriplePattern, Variable, WindowSpec,
};
pub use document::{parse_rule_document, RuleParser, DEFAULT_SOFT_RULE_PATTERN};
pub use error::RuleError;
pub use printer::{pretty_print, pretty_print_with, print_expr, print_pattern, print_query};
