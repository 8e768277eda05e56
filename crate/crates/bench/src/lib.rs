//! Inputs shared by the benchmarks.

use streamfuse::fusion::Hypothesis;
use streamfuse::rdf::vocab::{ns, sosa, ssr};
use streamfuse::rdf::{Term, TimestampedFact};
use streamfuse::tracker::{BBox, DetectionRecord};

pub const OCCLUSION: &str = include_str!("../../core/fixtures/occlusion_detections.csv");
pub const RULES: &str = concat!(
    include_str!("../../core/fixtures/rule_w_1.ttl"),
    include_str!("../../core/fixtures/rule_w_2.ttl"),
    include_str!("../../core/fixtures/rule_w_3.ttl"),
);

/// A dense `n x n` association instance with deterministic confidences.
pub fn associations(n: usize) -> Vec<Hypothesis> {
    let mut hs = Vec::new();
    for d in 0..n {
        for t in 0..n {
            let (det, tgt) = (ns(&format!("b{d}")), ns(&format!("o{t}")));
            hs.push(Hypothesis {
                rule: ssr(if (d + t) % 2 == 0 { "rule_w_2" } else { "rule_w_3" }),
                tick: 0,
                facts: vec![TimestampedFact::from_parts(det.clone(), sosa("isSampleOf"), tgt.clone(), 0)],
                detection: Some(Term::Iri(det)),
                target: Some(Term::Iri(tgt)),
                confidence: ((d * 7 + t * 13) % 17) as f64 / 17.0,
                evidence: vec![],
                filters: vec![],
            });
        }
    }
    hs
}

/// `objects` boxes moving diagonally for `frames` frames.
pub fn moving_objects(objects: usize, frames: u64) -> Vec<DetectionRecord> {
    let mut out = Vec::new();
    for t in 1..=frames {
        for i in 0..objects {
            let k = t as f64;
            out.push(DetectionRecord {
                frame: t,
                bbox: BBox::new(100.0 * i as f64 + 2.0 * k, 50.0 + 1.5 * k, 60.0, 40.0).expect("positive size"),
                score: 0.95,
                label: "car".into(),
                appearance_id: None,
            });
        }
    }
    out
}
