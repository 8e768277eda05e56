//! Left-deep hash joins over pattern match rows.

use std::collections::HashMap;

use super::binding::{match_fact, Binding};
use super::window::WindowState;
use crate::ql::{StreamBlock, TriplePattern, Variable};
use crate::rdf::Term;

/// Pattern evaluation order: more constants first, then textual order.
pub(crate) fn join_order(patterns: &[TriplePattern]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..patterns.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(patterns[i].constant_count()));
    order
}

pub(crate) fn row_vars(p: &TriplePattern, block_ts: Option<&Variable>) -> Vec<Variable> {
    let mut vars = p.variables();
    if let Some(t) = block_ts {
        if !vars.contains(t) {
            vars.push(t.clone());
        }
    }
    vars
}

/// Joins `rel` (all rows binding `domain`) with `rows` (all binding
/// `vars`) on their shared variables. `domain` is extended in place.
pub(crate) fn hash_join<'a>(
    rel: Vec<Binding>,
    domain: &mut Vec<Variable>,
    rows: impl IntoIterator<Item = &'a Binding>,
    vars: &[Variable],
) -> Vec<Binding> {
    if rel.is_empty() {
        return rel;
    }
    let shared: Vec<&Variable> = vars.iter().filter(|v| domain.contains(v)).collect();
    let key = |b: &Binding| -> Option<Vec<Term>> { shared.iter().map(|v| b.get(v).cloned()).collect() };
    let mut table: HashMap<Vec<Term>, Vec<&Binding>> = HashMap::new();
    for r in rows {
        if let Some(k) = key(r) {
            table.entry(k).or_default().push(r);
        }
    }
    let mut out = Vec::new();
    for b in &rel {
        let Some(k) = key(b) else { continue };
        if let Some(matches) = table.get(&k) {
            for r in matches {
                if let Some(m) = b.merge(r) {
                    out.push(m);
                }
            }
        }
    }
    for v in vars {
        if !domain.contains(v) {
            domain.push(v.clone());
        }
    }
    out
}

/// Every extension of `seed` that satisfies all patterns of `block` over
/// the window's current contents. Filters are not applied.
pub fn match_block(block: &StreamBlock, window: &WindowState, seed: &Binding) -> Vec<Binding> {
    let mut domain: Vec<Variable> = seed.iter().map(|(v, _)| v.clone()).collect();
    let mut rel = vec![seed.clone()];
    let facts: Vec<_> = window.contents().collect();
    for i in join_order(&block.patterns) {
        let p = &block.patterns[i];
        let mut rows: Vec<Binding> = facts
            .iter()
            .filter_map(|f| match_fact(p, f, block.timestamp.as_ref()))
            .collect();
        rows.sort();
        rows.dedup();
        rel = hash_join(rel, &mut domain, &rows, &row_vars(p, block.timestamp.as_ref()));
    }
    rel.sort();
    rel.dedup();
    rel
}
