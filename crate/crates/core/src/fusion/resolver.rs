use std::collections::BTreeSet;

use super::explain::{explain, ExplanationRecord};
use super::select::{select_gold, select_world, Hypothesis, RuleWeights, WorldSelection};
use crate::rdf::vocab::sosa;
use crate::rdf::{PrefixMap, Term, Tick, TimestampedFact};
use crate::runtime::{Candidate, HypothesisResolver, Resolution};

/// How a candidate becomes a hypothesis: which facts it asserts and which
/// detection and target it claims.
pub struct Shape {
    pub facts: Vec<TimestampedFact>,
    pub pair: Option<(Term, Term)>,
}

pub trait Shaper {
    fn shape(&self, candidate: &Candidate) -> Shape;
}

/// `?D sosa:isSampleOf ?O` heads are associations of detection `?D` with
/// target `?O`; everything else is an event.
#[derive(Clone, Copy, Debug, Default)]
pub struct SampleOfShaper;

impl Shaper for SampleOfShaper {
    fn shape(&self, c: &Candidate) -> Shape {
        let pair = c
            .facts
            .first()
            .filter(|f| f.predicate() == &sosa("isSampleOf"))
            .map(|f| (f.subject().clone(), f.object().clone()));
        Shape {
            facts: c.facts.clone(),
            pair,
        }
    }
}

pub fn to_hypothesis(c: &Candidate, shape: Shape) -> Hypothesis {
    let (detection, target) = match shape.pair {
        Some((d, t)) => (Some(d), Some(t)),
        None => (None, None),
    };
    Hypothesis {
        rule: c.rule.clone(),
        tick: c.tick,
        facts: shape.facts,
        detection,
        target,
        confidence: c.confidence.clamp(0.0, 1.0),
        evidence: c.evidence.clone(),
        filters: c.filters.clone(),
    }
}

/// Runs [`select_world`] over each stratum's soft candidates and keeps
/// every selection for inspection. With gold facts set, follows them
/// instead ([`select_gold`]).
pub struct FusionResolver<S: Shaper = SampleOfShaper> {
    pub weights: RuleWeights,
    pub shaper: S,
    pub gold: Option<BTreeSet<TimestampedFact>>,
    selections: Vec<WorldSelection>,
}

impl FusionResolver<SampleOfShaper> {
    pub fn new(weights: RuleWeights) -> Self {
        Self::with_shaper(weights, SampleOfShaper)
    }
}

impl<S: Shaper> FusionResolver<S> {
    pub fn with_shaper(weights: RuleWeights, shaper: S) -> Self {
        FusionResolver {
            weights,
            shaper,
            gold: None,
            selections: Vec::new(),
        }
    }

    /// Selections made since the last call, oldest first.
    pub fn take_selections(&mut self) -> Vec<WorldSelection> {
        std::mem::take(&mut self.selections)
    }

    /// Explanation records for selections made since the last call.
    pub fn take_explanations(&mut self, prefixes: &PrefixMap) -> Vec<ExplanationRecord> {
        self.take_selections().iter().flat_map(|s| explain(s, prefixes)).collect()
    }
}

impl<S: Shaper> HypothesisResolver for FusionResolver<S> {
    fn resolve(&mut self, _tick: Tick, candidates: &[Candidate]) -> Vec<Resolution> {
        let hyps: Vec<Hypothesis> = candidates
            .iter()
            .map(|c| to_hypothesis(c, self.shaper.shape(c)))
            .collect();
        let sel = match &self.gold {
            Some(g) => select_gold(&hyps, g, &self.weights),
            None => select_world(&hyps, &self.weights),
        };
        let out = sel
            .chosen
            .iter()
            .map(|&i| Resolution {
                candidate: i,
                facts: sel.hypotheses[i].facts.clone(),
            })
            .collect();
        self.selections.push(sel);
        out
    }
}
