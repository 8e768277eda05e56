//! Exhaustive world enumeration and random association instances.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use streamfuse::fusion::{Hypothesis, RuleWeights};
use streamfuse::rdf::vocab::{ns, sosa, ssr};
use streamfuse::rdf::{Term, TimestampedFact};

pub fn assoc(rule: usize, det: usize, tgt: usize, conf: f64) -> Hypothesis {
    let (d, t) = (ns(&format!("b{det}")), ns(&format!("o{tgt}")));
    Hypothesis {
        rule: ssr(&format!("rule_w_{rule}")),
        tick: 0,
        facts: vec![TimestampedFact::from_parts(d.clone(), sosa("isSampleOf"), t.clone(), 0)],
        detection: Some(Term::Iri(d)),
        target: Some(Term::Iri(t)),
        confidence: conf,
        evidence: vec![],
        filters: vec![],
    }
}

pub fn event(i: usize, conf: f64) -> Hypothesis {
    Hypothesis {
        rule: ssr("rule_w_1"),
        tick: 0,
        facts: vec![TimestampedFact::from_parts(ns(&format!("o{i}")), ns("enters"), ssr("FoV"), 0)],
        detection: None,
        target: None,
        confidence: conf,
        evidence: vec![],
        filters: vec![],
    }
}

/// Best score over every subset of hypotheses in which no detection and no
/// target repeats, by plain enumeration.
pub fn brute_force(hs: &[Hypothesis], w: &RuleWeights) -> f64 {
    fn go(i: usize, hs: &[Hypothesis], w: &RuleWeights, dets: &mut Vec<Term>, tgts: &mut Vec<Term>) -> f64 {
        if i == hs.len() {
            return 0.0;
        }
        let skip = go(i + 1, hs, w, dets, tgts);
        let h = &hs[i];
        let u = w.get(&h.rule) * h.confidence;
        match (&h.detection, &h.target) {
            (Some(d), Some(t)) => {
                if dets.contains(d) || tgts.contains(t) {
                    return skip;
                }
                dets.push(d.clone());
                tgts.push(t.clone());
                let take = u + go(i + 1, hs, w, dets, tgts);
                dets.pop();
                tgts.pop();
                skip.max(take)
            }
            _ => u + skip,
        }
    }
    go(0, hs, w, &mut Vec::new(), &mut Vec::new())
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<Hypothesis>, RuleWeights) {
    let nd = rng.gen_range(0..=6);
    let nt = rng.gen_range(0..=6);
    let density: f64 = rng.gen_range(0.2..1.0);
    let mut hs = Vec::new();
    for d in 0..nd {
        for t in 0..nt {
            if rng.gen_bool(density) {
                hs.push(assoc(rng.gen_range(2..=3), d, t, rng.gen_range(0.0..1.0)));
                if rng.gen_bool(0.15) {
                    hs.push(assoc(rng.gen_range(2..=3), d, t, rng.gen_range(0.0..1.0)));
                }
            }
        }
    }
    for i in 0..rng.gen_range(0..3) {
        hs.push(event(i, rng.gen_range(0.0..1.0)));
    }
    let mut w = RuleWeights::new();
    for r in 1..=3 {
        w.set(ssr(&format!("rule_w_{r}")), rng.gen_range(0.0..3.0));
    }
    (hs, w)
}
