use super::select::{Rejection, WorldSelection};
use crate::rdf::{serialize_fact_with, serialize_iri, Iri, PrefixMap, Tick};

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Chosen,
    Dominated { by: String },
    Conflict { winner: String },
    NoUtility,
}

/// Why one hypothesis was or was not selected.
#[derive(Clone, Debug, PartialEq)]
pub struct ExplanationRecord {
    pub tick: Tick,
    pub rule: Iri,
    pub head: String,
    pub verdict: Verdict,
    pub confidence: f64,
    pub weight: f64,
    /// Utility added to the selection score (0 when rejected).
    pub contribution: f64,
    pub evidence: Vec<String>,
    pub filters: Vec<String>,
}

fn head_text(sel: &WorldSelection, i: usize, prefixes: &PrefixMap) -> String {
    sel.hypotheses[i]
        .facts
        .iter()
        .map(|f| serialize_fact_with(f, prefixes))
        .collect::<Vec<_>>()
        .join(" ")
}

/// One record per chosen and per rejected hypothesis, in input order.
pub fn explain(sel: &WorldSelection, prefixes: &PrefixMap) -> Vec<ExplanationRecord> {
    let mut verdicts: Vec<Option<Verdict>> = vec![None; sel.hypotheses.len()];
    for &i in &sel.chosen {
        verdicts[i] = Some(Verdict::Chosen);
    }
    for &(i, r) in &sel.rejected {
        verdicts[i] = Some(match r {
            Rejection::Dominated { by } => Verdict::Dominated {
                by: head_text(sel, by, prefixes),
            },
            Rejection::Conflict { winner } => Verdict::Conflict {
                winner: head_text(sel, winner, prefixes),
            },
            Rejection::NoUtility => Verdict::NoUtility,
        });
    }
    verdicts
        .into_iter()
        .enumerate()
        .filter_map(|(i, v)| {
            let v = v?;
            let h = &sel.hypotheses[i];
            Some(ExplanationRecord {
                tick: h.tick,
                rule: h.rule.clone(),
                head: head_text(sel, i, prefixes),
                contribution: if v == Verdict::Chosen { sel.utility(i) } else { 0.0 },
                verdict: v,
                confidence: h.confidence,
                weight: sel.weights[i],
                evidence: h.evidence.clone(),
                filters: h.filters.clone(),
            })
        })
        .collect()
}

fn clean(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

impl ExplanationRecord {
    /// Tab-separated: tick, verdict, rule, head, confidence, weight,
    /// contribution, reason, evidence, filters. List fields are joined
    /// with " | ".
    pub fn to_tsv(&self, prefixes: &PrefixMap) -> String {
        let (status, reason) = match &self.verdict {
            Verdict::Chosen => ("chosen", "-".to_string()),
            Verdict::Dominated { by } => ("dominated", format!("by {by}")),
            Verdict::Conflict { winner } => ("conflict", format!("lost to {winner}")),
            Verdict::NoUtility => ("rejected", "zero utility".to_string()),
        };
        [
            self.tick.to_string(),
            status.to_string(),
            serialize_iri(&self.rule, prefixes),
            self.head.clone(),
            format!("{}", self.confidence),
            format!("{}", self.weight),
            format!("{}", self.contribution),
            reason,
            self.evidence.join(" | "),
            self.filters.join(" | "),
        ]
        .iter()
        .map(|f| clean(f))
        .collect::<Vec<_>>()
        .join("\t")
    }
}
