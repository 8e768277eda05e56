//! Static analysis of a parsed rule: variable table, stream dependencies,
//! head safety and the predicate set used for pushdown.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use crate::rdf::{Iri, StreamId, Term};

/// Where a variable occurs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Occurrences {
    pub head: usize,
    pub positive: usize,
    pub naf: usize,
    pub filter: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Safety {
    Safe,
    /// Head variables with no positive binding occurrence, sorted.
    Unsafe(Vec<Variable>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RuleReport {
    pub variables: BTreeMap<Variable, Occurrences>,
    pub streams: BTreeSet<StreamId>,
    pub predicates: BTreeSet<Iri>,
    pub safety: Safety,
}

pub fn analyze_rule(rule: &Rule) -> RuleReport {
    let mut variables: BTreeMap<Variable, Occurrences> = BTreeMap::new();
    let mut predicates = BTreeSet::new();
    let mut streams = BTreeSet::new();

    for p in &rule.head {
        collect_predicates(p, &mut predicates);
        for v in p.variables() {
            variables.entry(v).or_default().head += 1;
        }
    }
    for p in &rule.body.static_patterns {
        collect_predicates(p, &mut predicates);
        for v in p.variables() {
            variables.entry(v).or_default().positive += 1;
        }
    }
    for (blocks, positive) in [(&rule.body.positive, true), (&rule.body.naf, false)] {
        for b in blocks {
            streams.insert(b.stream.clone());
            for p in &b.patterns {
                collect_predicates(p, &mut predicates);
            }
            for v in b.bound_variables() {
                let e = variables.entry(v).or_default();
                if positive {
                    e.positive += 1;
                } else {
                    e.naf += 1;
                }
            }
            for f in &b.filters {
                for v in f.variables() {
                    variables.entry(v).or_default().filter += 1;
                }
            }
        }
    }
    for f in &rule.body.filters {
        for v in f.variables() {
            variables.entry(v).or_default().filter += 1;
        }
    }

    let unsafe_vars: Vec<Variable> = variables
        .iter()
        .filter(|(_, o)| o.head > 0 && o.positive == 0)
        .map(|(v, _)| v.clone())
        .collect();
    let safety = if unsafe_vars.is_empty() {
        Safety::Safe
    } else {
        Safety::Unsafe(unsafe_vars)
    };
    RuleReport {
        variables,
        streams,
        predicates,
        safety,
    }
}

fn collect_predicates(p: &TriplePattern, out: &mut BTreeSet<Iri>) {
    match p {
        TriplePattern::Triple {
            subject,
            predicate,
            object,
            ..
        } => {
            nested_predicates(subject, out);
            predicate_iri(predicate, out);
            nested_predicates(object, out);
        }
        TriplePattern::Mention { quoted, .. } => quoted_predicates(quoted, out),
    }
}

fn quoted_predicates(q: &QuotedPattern, out: &mut BTreeSet<Iri>) {
    nested_predicates(&q.subject, out);
    predicate_iri(&q.predicate, out);
    nested_predicates(&q.object, out);
}

fn predicate_iri(t: &PatternTerm, out: &mut BTreeSet<Iri>) {
    if let PatternTerm::Const(Term::Iri(iri)) = t {
        out.insert(iri.clone());
    }
}

fn nested_predicates(t: &PatternTerm, out: &mut BTreeSet<Iri>) {
    if let PatternTerm::Quoted(q) = t {
        quoted_predicates(q, out);
    }
}

/// The expression whose value is a candidate's confidence: the left-hand
/// side of the last `expr > c` / `expr >= c` conjunct over positive filters.
pub fn evidence_expr(body: &BodySpec) -> Option<&FilterExpr> {
    body.positive_filters()
        .flat_map(|f| f.conjuncts())
        .filter_map(|c| match c {
            FilterExpr::Binary(BinOp::Gt | BinOp::Ge, lhs, rhs) if matches!(**rhs, FilterExpr::Const(_)) => {
                Some(&**lhs)
            }
            _ => None,
        })
        .last()
}
