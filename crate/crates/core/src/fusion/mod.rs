//! Selection of the most likely world among competing soft-rule
//! hypotheses: maximum-utility one-to-one association of detections and
//! targets, with explanations for what was kept and what was not.

mod explain;
pub mod hungarian;
mod resolver;
mod select;
mod weights_io;

pub use explain::{explain, ExplanationRecord, Verdict};
pub use resolver::{to_hypothesis, FusionResolver, SampleOfShaper, Shape, Shaper};
pub use select::{select_gold, select_world, Hypothesis, Rejection, RuleWeights, WorldSelection, DEFAULT_WEIGHT};
pub use weights_io::{parse_iri_token, parse_weights, write_weights, WeightsError};
