use std::collections::BTreeSet;

use super::detection::{DetectionRecord, TrackerError};
use super::tracklet::{MotRow, Tracker, TrackerConfig};
use crate::fusion::{ExplanationRecord, FusionResolver, RuleWeights, Shape, Shaper, WorldSelection};
use crate::ql::{parse_rule_document, Rule, RuleError};
use crate::rdf::vocab::{ns, sosa};
use crate::rdf::{PrefixMap, StreamId, Term, Tick, TimestampedFact};
use crate::runtime::{Candidate, Emitted, Engine, RuntimeConfig, RuntimeError};

/// FoV entry, IoU association and re-identification rules, verbatim.
pub const TRACKING_RULES: &str = concat!(
    include_str!("../../fixtures/rule_w_1.ttl"),
    "\n",
    include_str!("../../fixtures/rule_w_2.ttl"),
    "\n",
    include_str!("../../fixtures/rule_w_3.ttl"),
);

pub fn tracking_rules() -> Result<Vec<Rule>, RuleError> {
    parse_rule_document(TRACKING_RULES)
}

/// Reads `?X sosa:isSampleOf ?O` heads as associations of the current
/// detection box in the binding with `?O`, and rewrites the head so that
/// the detection box is its subject.
pub struct DetectionShaper {
    pub detections: BTreeSet<Term>,
}

impl Shaper for DetectionShaper {
    fn shape(&self, c: &Candidate) -> Shape {
        let Some(head) = c.facts.first().filter(|f| f.predicate() == &sosa("isSampleOf")) else {
            return Shape {
                facts: c.facts.clone(),
                pair: None,
            };
        };
        let det = if self.detections.contains(head.subject()) {
            Some(head.subject().clone())
        } else {
            c.binding.iter().map(|(_, t)| t).find(|t| self.detections.contains(t)).cloned()
        };
        match det {
            Some(d) => Shape {
                facts: vec![TimestampedFact::from_parts(
                    d.clone(),
                    sosa("isSampleOf"),
                    head.object().clone(),
                    c.tick,
                )],
                pair: Some((d, head.object().clone())),
            },
            None => Shape {
                facts: c.facts.clone(),
                pair: None,
            },
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Rules(#[from] RuleError),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error(transparent)]
    Tracker(#[from] TrackerError),
}

/// Everything one frame produced.
#[derive(Clone, Debug, Default)]
pub struct FrameResult {
    pub tick: Tick,
    pub rows: Vec<MotRow>,
    /// Rule output after selection (associations and events).
    pub emitted: Vec<Emitted>,
    pub selections: Vec<WorldSelection>,
    /// `(detection, object)` pairs handed to the tracker.
    pub associations: Vec<(Term, Term)>,
}

/// Feature extraction, rule evaluation, world selection and tracklet
/// maintenance, one frame at a time.
pub struct TrackingPipeline {
    engine: Engine,
    tracker: Tracker,
    stream: StreamId,
    pub weights: RuleWeights,
}

impl TrackingPipeline {
    pub fn new(config: TrackerConfig, weights: RuleWeights) -> Result<Self, PipelineError> {
        Self::with_rules(config, weights, tracking_rules()?, RuntimeConfig::default())
    }

    pub fn with_rules(
        config: TrackerConfig,
        mut weights: RuleWeights,
        rules: Vec<Rule>,
        runtime: RuntimeConfig,
    ) -> Result<Self, PipelineError> {
        let stream = StreamId(ns("ssr"));
        let mut engine = Engine::new(runtime);
        engine.register_stream(stream.clone())?;
        weights.ensure(rules.iter().filter(|r| r.kind == crate::ql::RuleKind::Soft).map(|r| &r.id));
        engine.load_rules(rules)?;
        Ok(TrackingPipeline {
            engine,
            tracker: Tracker::new(config),
            stream,
            weights,
        })
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn tracker(&self) -> &Tracker {
        &self.tracker
    }

    /// Processes the detections of frame `t`. Frames must increase.
    pub fn step(&mut self, t: Tick, records: &[DetectionRecord]) -> Result<FrameResult, PipelineError> {
        self.step_with_gold(t, records, None)
    }

    /// Like [`step`](Self::step), but when `gold` is given the selection
    /// asserts exactly those association facts instead of optimizing, so
    /// tracklets follow the labels.
    pub fn step_with_gold(
        &mut self,
        t: Tick,
        records: &[DetectionRecord],
        gold: Option<&BTreeSet<TimestampedFact>>,
    ) -> Result<FrameResult, PipelineError> {
        let (facts, dets) = self.tracker.extract_features(records, t)?;
        self.engine.push(&self.stream, facts)?;
        let shaper = DetectionShaper {
            detections: dets.iter().map(|d| d.term.clone()).collect(),
        };
        let mut resolver = FusionResolver::with_shaper(self.weights.clone(), shaper);
        resolver.gold = gold.cloned();
        let emitted = self.engine.evaluate_tick_with(t, &mut resolver)?;
        let selections = resolver.take_selections();
        let associations = chosen_associations(&selections);
        let (facts, rows) = self.tracker.advance_tracklets(&associations, &dets, t);
        self.engine.push(&self.stream, facts)?;
        Ok(FrameResult {
            tick: t,
            rows,
            emitted,
            selections,
            associations,
        })
    }

    /// Runs every frame from the first to the last record frame, including
    /// frames without detections.
    pub fn run(&mut self, records: &[DetectionRecord]) -> Result<Vec<FrameResult>, PipelineError> {
        let Some(first) = records.iter().map(|r| r.frame).min() else {
            return Ok(Vec::new());
        };
        let last = records.iter().map(|r| r.frame).max().unwrap_or(first);
        let mut out = Vec::new();
        for t in first..=last {
            let frame: Vec<DetectionRecord> = records.iter().filter(|r| r.frame == t).cloned().collect();
            out.push(self.step(t, &frame)?);
        }
        Ok(out)
    }
}

/// Association pairs chosen in any selection, in selection order.
pub fn chosen_associations(selections: &[WorldSelection]) -> Vec<(Term, Term)> {
    selections
        .iter()
        .flat_map(|s| s.chosen())
        .filter_map(|h| Some((h.detection.clone()?, h.target.clone()?)))
        .collect()
}

/// Explanation lines of one frame.
pub fn explain_frame(frame: &FrameResult, prefixes: &PrefixMap) -> Vec<ExplanationRecord> {
    frame
        .selections
        .iter()
        .flat_map(|s| crate::fusion::explain(s, prefixes))
        .collect()
}
