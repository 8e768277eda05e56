//! Evaluation order of rules within a tick.
//!
//! A rule must run after every rule whose heads it reads through NAF, and
//! after every soft rule whose heads it reads positively, because soft heads
//! only exist once the resolver has chosen among them. Soft rules that assert
//! the same predicate compete in one resolution, so reading each other's
//! heads does not separate them. Cycles through such ordering edges are
//! rejected.

use std::collections::BTreeSet;

use crate::ql::{PatternTerm, QuotedPattern, Rule, RuleKind, TriplePattern};
use crate::rdf::{Iri, Term};

#[derive(Clone, Debug, Default)]
struct PredSet {
    iris: BTreeSet<Iri>,
    any: bool,
}

impl PredSet {
    fn overlaps(&self, other: &PredSet) -> bool {
        (self.any && (other.any || !other.iris.is_empty()))
            || (other.any && !self.iris.is_empty())
            || self.iris.intersection(&other.iris).next().is_some()
    }

    fn add_pattern(&mut self, p: &TriplePattern) {
        match p {
            TriplePattern::Triple {
                subject,
                predicate,
                object,
                ..
            } => {
                self.add_term(subject);
                self.add_predicate(predicate);
                self.add_term(object);
            }
            TriplePattern::Mention { quoted, .. } => self.add_quoted(quoted),
        }
    }

    fn add_quoted(&mut self, q: &QuotedPattern) {
        self.add_term(&q.subject);
        self.add_predicate(&q.predicate);
        self.add_term(&q.object);
    }

    fn add_term(&mut self, t: &PatternTerm) {
        if let PatternTerm::Quoted(q) = t {
            self.add_quoted(q);
        }
    }

    fn add_predicate(&mut self, t: &PatternTerm) {
        match t {
            PatternTerm::Const(Term::Iri(i)) => {
                self.iris.insert(i.clone());
            }
            _ => self.any = true,
        }
    }
}

/// The predicate of the fact a head pattern asserts.
fn asserted_predicate(p: &TriplePattern) -> Option<&Iri> {
    let t = match p {
        TriplePattern::Triple { predicate, .. } => predicate,
        TriplePattern::Mention { quoted, .. } => &quoted.predicate,
    };
    match t {
        PatternTerm::Const(Term::Iri(i)) => Some(i),
        _ => None,
    }
}

fn competes(a: &Rule, b: &Rule) -> bool {
    if a.kind != RuleKind::Soft || b.kind != RuleKind::Soft {
        return false;
    }
    let pa: BTreeSet<&Iri> = a.head.iter().filter_map(asserted_predicate).collect();
    b.head.iter().filter_map(asserted_predicate).any(|p| pa.contains(p))
}

/// Groups rule indices into strata, lowest first. `Err` carries the ids of
/// rules on an illegal cycle.
pub fn stratify(rules: &[Rule]) -> Result<Vec<Vec<usize>>, Vec<Iri>> {
    let n = rules.len();
    let mut heads = vec![PredSet::default(); n];
    let mut pos = vec![PredSet::default(); n];
    let mut neg = vec![PredSet::default(); n];
    for (i, r) in rules.iter().enumerate() {
        r.head.iter().for_each(|p| heads[i].add_pattern(p));
        for b in &r.body.positive {
            b.patterns.iter().for_each(|p| pos[i].add_pattern(p));
        }
        r.body.static_patterns.iter().for_each(|p| pos[i].add_pattern(p));
        for b in &r.body.naf {
            b.patterns.iter().for_each(|p| neg[i].add_pattern(p));
        }
    }
    // edges[p] = (consumer, strict)
    let mut edges: Vec<Vec<(usize, bool)>> = vec![Vec::new(); n];
    for p in 0..n {
        for c in 0..n {
            let strict_pos = heads[p].overlaps(&pos[c])
                && rules[p].kind == RuleKind::Soft
                && !competes(&rules[p], &rules[c]);
            let plain_pos = heads[p].overlaps(&pos[c]);
            let naf = heads[p].overlaps(&neg[c]);
            if naf || strict_pos {
                edges[p].push((c, true));
            } else if plain_pos {
                edges[p].push((c, false));
            }
        }
    }
    let comp = scc(n, &edges);
    let ncomp = comp.iter().copied().max().map_or(0, |m| m + 1);
    for p in 0..n {
        for &(c, strict) in &edges[p] {
            if strict && comp[p] == comp[c] {
                let mut ids: Vec<Iri> = (0..n)
                    .filter(|&i| comp[i] == comp[p])
                    .map(|i| rules[i].id.clone())
                    .collect();
                ids.sort();
                return Err(ids);
            }
        }
    }
    // Longest path over the condensation. Components from `scc` come out in
    // reverse topological order, so iterate from the highest index.
    let mut level = vec![0usize; ncomp];
    let mut order: Vec<usize> = (0..ncomp).collect();
    order.reverse();
    for &cp in &order {
        for p in (0..n).filter(|&p| comp[p] == cp) {
            for &(c, strict) in &edges[p] {
                if comp[c] != cp {
                    let l = level[cp] + usize::from(strict);
                    if l > level[comp[c]] {
                        level[comp[c]] = l;
                    }
                }
            }
        }
    }
    let depth = level.iter().copied().max().map_or(0, |m| m + 1);
    let mut strata = vec![Vec::new(); depth];
    for i in 0..n {
        strata[level[comp[i]]].push(i);
    }
    strata.retain(|s| !s.is_empty());
    Ok(strata)
}

/// Tarjan's algorithm. Component ids are assigned in reverse topological
/// order of the condensation.
fn scc(n: usize, edges: &[Vec<(usize, bool)>]) -> Vec<usize> {
    struct St<'a> {
        edges: &'a [Vec<(usize, bool)>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        comp: Vec<usize>,
        ncomp: usize,
    }
    fn visit(s: &mut St<'_>, v: usize) {
        s.index[v] = Some(s.next);
        s.low[v] = s.next;
        s.next += 1;
        s.stack.push(v);
        s.on[v] = true;
        for &(w, _) in &s.edges[v] {
            match s.index[w] {
                None => {
                    visit(s, w);
                    s.low[v] = s.low[v].min(s.low[w]);
                }
                Some(iw) if s.on[w] => s.low[v] = s.low[v].min(iw),
                _ => {}
            }
        }
        if Some(s.low[v]) == s.index[v] {
            loop {
                let w = s.stack.pop().expect("tarjan stack");
                s.on[w] = false;
                s.comp[w] = s.ncomp;
                if w == v {
                    break;
                }
            }
            s.ncomp += 1;
        }
    }
    let mut s = St {
        edges,
        index: vec![None; n],
        low: vec![0; n],
        on: vec![false; n],
        stack: Vec::new(),
        next: 0,
        comp: vec![0; n],
        ncomp: 0,
    };
    for v in 0..n {
        if s.index[v].is_none() {
            visit(&mut s, v);
        }
    }
    s.comp
}
