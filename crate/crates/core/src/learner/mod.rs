//! Soft-rule weight learning from labeled ticks with a structured
//! perceptron: whenever the selected world differs from the labeled one,
//! weights move toward the rules the labels used.

use std::collections::{BTreeMap, BTreeSet};

use crate::fusion::{select_gold, select_world, Hypothesis, RuleWeights, WorldSelection};
use crate::rdf::{FactParser, Iri, ParseError, PrefixMap, Tick, TimestampedFact};
use crate::tracker::{DetectionRecord, PipelineError, TrackingPipeline};

pub const DEFAULT_LR: f64 = 0.1;
pub const DEFAULT_MAX_EPOCHS: usize = 100;

/// One training sample: the hypotheses competing at a tick and the facts
/// the labels say should be asserted.
#[derive(Clone, Debug)]
pub struct LabeledTick {
    pub tick: Tick,
    pub hypotheses: Vec<Hypothesis>,
    pub gold: BTreeSet<TimestampedFact>,
}

impl LabeledTick {
    /// Gold facts no hypothesis asserts.
    pub fn underivable(&self) -> Vec<TimestampedFact> {
        let reachable: BTreeSet<&TimestampedFact> = self.hypotheses.iter().flat_map(|h| &h.facts).collect();
        self.gold.iter().filter(|f| !reachable.contains(f)).cloned().collect()
    }
}

/// A sample skipped because its gold cannot be produced.
#[derive(Clone, Debug, PartialEq)]
pub struct Infeasible {
    pub index: usize,
    pub tick: Tick,
    pub missing: Vec<TimestampedFact>,
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    /// Epochs run.
    pub epochs: usize,
    pub weights: RuleWeights,
    /// Mismatched samples per epoch.
    pub mismatches: Vec<usize>,
    pub converged: bool,
    pub infeasible: Vec<Infeasible>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LearnError {
    #[error("learning rate must be positive, got {0}")]
    LearningRate(f64),
    #[error("no training samples")]
    NoSamples,
}

/// Per-rule statistic of a selected world that the update compares.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Features {
    /// Number of the rule's hypotheses in the world.
    Count,
    /// Sum of the confidences of the rule's hypotheses, the quantity a
    /// world's score is linear in.
    #[default]
    Confidence,
}

impl std::str::FromStr for Features {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "count" => Ok(Features::Count),
            "confidence" => Ok(Features::Confidence),
            other => Err(format!("unknown features {other:?}, expected count or confidence")),
        }
    }
}

impl std::fmt::Display for Features {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Features::Count => "count",
            Features::Confidence => "confidence",
        })
    }
}

/// Per-rule feature values of the hypotheses `chosen`.
pub fn rule_features(hyps: &[Hypothesis], chosen: &[usize], features: Features) -> BTreeMap<Iri, f64> {
    let mut out = BTreeMap::new();
    for &i in chosen {
        let x = match features {
            Features::Count => 1.0,
            Features::Confidence => hyps[i].confidence,
        };
        *out.entry(hyps[i].rule.clone()).or_insert(0.0) += x;
    }
    out
}

/// Number of hypotheses of each rule among `chosen`.
pub fn rule_counts(hyps: &[Hypothesis], chosen: &[usize]) -> BTreeMap<Iri, usize> {
    rule_features(hyps, chosen, Features::Count)
        .into_iter()
        .map(|(r, x)| (r, x as usize))
        .collect()
}

/// The world selected under `weights` and the labeled world, or `None`
/// when they agree.
pub fn mismatch(sample: &LabeledTick, weights: &RuleWeights) -> Option<(WorldSelection, WorldSelection)> {
    let chosen = select_world(&sample.hypotheses, weights);
    let gold = select_gold(&sample.hypotheses, &sample.gold, weights);
    (chosen.chosen != gold.chosen).then_some((chosen, gold))
}

/// One perceptron step: `w_r <- max(0, w_r + lr * (gold_r - chosen_r))`
/// with `x_r` the rule's feature value in each world.
pub fn update(
    weights: &mut RuleWeights,
    hyps: &[Hypothesis],
    chosen: &[usize],
    gold: &[usize],
    lr: f64,
    features: Features,
) {
    let c = rule_features(hyps, chosen, features);
    let g = rule_features(hyps, gold, features);
    let rules: BTreeSet<&Iri> = c.keys().chain(g.keys()).collect();
    for r in rules {
        let delta = g.get(r).unwrap_or(&0.0) - c.get(r).unwrap_or(&0.0);
        if delta != 0.0 {
            weights.set(r.clone(), weights.get(r) + lr * delta);
        }
    }
}

/// Training knobs.
#[derive(Clone, Copy, Debug)]
pub struct TrainConfig {
    pub lr: f64,
    pub max_epochs: usize,
    pub features: Features,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: DEFAULT_LR,
            max_epochs: DEFAULT_MAX_EPOCHS,
            features: Features::default(),
        }
    }
}

/// Runs the perceptron with the default features.
pub fn train(samples: &[LabeledTick], init: &RuleWeights, lr: f64, max_epochs: usize) -> Result<TrainReport, LearnError> {
    train_with(
        samples,
        init,
        &TrainConfig {
            lr,
            max_epochs,
            features: Features::default(),
        },
    )
}

/// Runs the perceptron in sample order until an epoch has no mismatches
/// or `max_epochs` is reached. Samples with underivable gold are reported
/// and skipped.
pub fn train_with(samples: &[LabeledTick], init: &RuleWeights, cfg: &TrainConfig) -> Result<TrainReport, LearnError> {
    let TrainConfig { lr, max_epochs, features } = *cfg;
    if lr.is_nan() || lr <= 0.0 {
        return Err(LearnError::LearningRate(lr));
    }
    if samples.is_empty() {
        return Err(LearnError::NoSamples);
    }
    let mut infeasible = Vec::new();
    let mut usable = Vec::new();
    for (index, s) in samples.iter().enumerate() {
        let missing = s.underivable();
        if missing.is_empty() {
            usable.push(s);
        } else {
            log::warn!("sample {index} (tick {}): {} gold fact(s) not derivable", s.tick, missing.len());
            infeasible.push(Infeasible {
                index,
                tick: s.tick,
                missing,
            });
        }
    }
    let mut weights = init.clone();
    for s in &usable {
        weights.ensure(s.hypotheses.iter().map(|h| &h.rule));
    }
    let mut mismatches = Vec::new();
    let mut converged = false;
    for _ in 0..max_epochs {
        let mut wrong = 0;
        for s in &usable {
            if let Some((chosen, gold)) = mismatch(s, &weights) {
                wrong += 1;
                update(&mut weights, &s.hypotheses, &chosen.chosen, &gold.chosen, lr, features);
            }
        }
        mismatches.push(wrong);
        if wrong == 0 {
            converged = true;
            break;
        }
    }
    Ok(TrainReport {
        epochs: mismatches.len(),
        weights,
        mismatches,
        converged,
        infeasible,
    })
}

#[derive(Debug, thiserror::Error)]
pub enum SamplesError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: ParseError,
    },
}

/// Reads a labeled samples file: `@prefix` lines, `#` comments, and
/// `tick<TAB>statements` lines whose facts are stamped with that tick.
/// Several lines may share a tick.
pub fn parse_gold(text: &str, prefixes: &PrefixMap) -> Result<BTreeMap<Tick, BTreeSet<TimestampedFact>>, SamplesError> {
    let mut prefixes = prefixes.clone();
    let mut out: BTreeMap<Tick, BTreeSet<TimestampedFact>> = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if trimmed.starts_with("@prefix") {
            prefixes = crate::rdf::parse_prefix_document_with(trimmed, &prefixes)
                .map_err(|source| SamplesError::Parse { line, source })?;
            continue;
        }
        let (tick, body) = raw.split_once('\t').ok_or_else(|| SamplesError::Line {
            line,
            message: "expected tick<TAB>statements".into(),
        })?;
        let tick: Tick = tick.trim().parse().map_err(|_| SamplesError::Line {
            line,
            message: format!("bad tick {:?}", tick.trim()),
        })?;
        let facts = FactParser::new()
            .with_prefixes(prefixes.clone())
            .with_default_timestamp(tick)
            .parse(body)
            .map_err(|source| SamplesError::Parse { line, source })?;
        out.entry(tick).or_default().extend(facts.into_iter().map(|f| f.at(tick)));
    }
    Ok(out)
}

/// Runs the tracking pipeline over `records` with selections forced to
/// the labels, so that later frames see the labeled tracklets, and turns
/// each selection that had association hypotheses into a sample.
pub fn collect_samples(
    pipeline: &mut TrackingPipeline,
    records: &[DetectionRecord],
    gold: &BTreeMap<Tick, BTreeSet<TimestampedFact>>,
) -> Result<Vec<LabeledTick>, PipelineError> {
    let Some(first) = records.iter().map(|r| r.frame).min() else {
        return Ok(Vec::new());
    };
    let last = records.iter().map(|r| r.frame).max().unwrap_or(first);
    let empty = BTreeSet::new();
    let mut out = Vec::new();
    for t in first..=last {
        let frame: Vec<DetectionRecord> = records.iter().filter(|r| r.frame == t).cloned().collect();
        let g = gold.get(&t).unwrap_or(&empty);
        let result = pipeline.step_with_gold(t, &frame, Some(g))?;
        for sel in result.selections {
            if sel.hypotheses.iter().any(Hypothesis::is_association) {
                out.push(LabeledTick {
                    tick: t,
                    gold: g.clone(),
                    hypotheses: sel.hypotheses,
                });
            }
        }
    }
    Ok(out)
}
