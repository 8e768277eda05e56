//! Window maintenance, pattern matching with hash joins, filters, NAF and
//! stratified per-tick evaluation.

mod binding;
mod engine;
mod error;
mod filter;
mod join;
mod stratify;
mod window;

pub use binding::{match_fact, tick_term, Binding};
pub use engine::{
    AcceptAll, Candidate, Diagnostics, Emitted, Engine, HypothesisResolver, Resolution, RuntimeConfig,
    DEFAULT_FIXPOINT_CAP,
};
pub use error::RuntimeError;
pub use filter::{eval, eval_filter, EvalError, GeometryLookup, NoGeometry, Value};
pub use join::match_block;
pub use stratify::stratify;
pub use window::WindowState;
