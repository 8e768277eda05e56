use std::collections::BTreeMap;
use std::fmt;

use crate::ql::{PatternTerm, QuotedPattern, TriplePattern, Variable};
use crate::rdf::{Literal, Term, Tick, TimestampedFact};

/// Variable assignment. Timestamp variables hold integer literals.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Binding(BTreeMap<Variable, Term>);

impl Binding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, v: &Variable) -> Option<&Term> {
        self.0.get(v)
    }

    pub fn contains(&self, v: &Variable) -> bool {
        self.0.contains_key(v)
    }

    /// Binds `v`, or checks agreement if it is already bound.
    pub fn bind(&mut self, v: &Variable, value: Term) -> bool {
        match self.0.get(v) {
            Some(existing) => *existing == value,
            None => {
                self.0.insert(v.clone(), value);
                true
            }
        }
    }

    pub fn bind_tick(&mut self, v: &Variable, tick: Tick) -> bool {
        self.bind(v, tick_term(tick))
    }

    /// Union of two bindings, `None` on conflict.
    pub fn merge(&self, other: &Binding) -> Option<Binding> {
        let (big, small) = if self.0.len() >= other.0.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut out = big.clone();
        for (v, t) in &small.0 {
            if !out.bind(v, t.clone()) {
                return None;
            }
        }
        Some(out)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Variable, &Term)> {
        self.0.iter()
    }

    pub fn project(&self, vars: &[Variable]) -> Binding {
        Binding(
            vars.iter()
                .filter_map(|v| self.0.get(v).map(|t| (v.clone(), t.clone())))
                .collect(),
        )
    }
}

impl fmt::Debug for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.0.iter()).finish()
    }
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(v, t)| format!("{v}={t}")).collect();
        write!(f, "{}", parts.join(" "))
    }
}

impl FromIterator<(Variable, Term)> for Binding {
    fn from_iter<I: IntoIterator<Item = (Variable, Term)>>(iter: I) -> Self {
        Binding(iter.into_iter().collect())
    }
}

pub fn tick_term(tick: Tick) -> Term {
    Literal::integer(tick as i64).into()
}

fn unify(p: &PatternTerm, t: &Term, b: &mut Binding) -> bool {
    match p {
        PatternTerm::Var(v) => b.bind(v, t.clone()),
        PatternTerm::Const(c) => c == t,
        PatternTerm::Quoted(q) => match t {
            Term::Quoted(triple) => {
                unify_quoted(q, &triple.subject, &Term::Iri(triple.predicate.clone()), &triple.object, b)
            }
            _ => false,
        },
    }
}

fn unify_quoted(q: &QuotedPattern, s: &Term, p: &Term, o: &Term, b: &mut Binding) -> bool {
    unify(&q.subject, s, b) && unify(&q.predicate, p, b) && unify(&q.object, o, b)
}

/// Matches one fact against one pattern. `block_ts` is the block header's
/// timestamp variable, bound to the fact's timestamp as well.
pub fn match_fact(p: &TriplePattern, fact: &TimestampedFact, block_ts: Option<&Variable>) -> Option<Binding> {
    let mut b = Binding::new();
    let ok = match p {
        TriplePattern::Triple {
            subject,
            predicate,
            object,
            ..
        } => {
            unify(subject, fact.subject(), &mut b)
                && unify(predicate, &Term::Iri(fact.predicate().clone()), &mut b)
                && unify(object, fact.object(), &mut b)
        }
        TriplePattern::Mention { quoted, .. } => match fact.subject() {
            Term::Quoted(t) => unify_quoted(quoted, &t.subject, &Term::Iri(t.predicate.clone()), &t.object, &mut b),
            _ => false,
        },
    };
    if !ok {
        return None;
    }
    for v in p.timestamp_var().into_iter().chain(block_ts) {
        if !b.bind_tick(v, fact.timestamp()) {
            return None;
        }
    }
    Some(b)
}
