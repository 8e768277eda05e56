use std::fmt;
use std::sync::Arc;

use crate::rdf::{Iri, StreamId, Term, Tick};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Variable(Arc<str>);

impl Variable {
    /// Name without the leading `?`.
    pub fn new(name: impl AsRef<str>) -> Self {
        Variable(Arc::from(name.as_ref()))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PatternTerm {
    Var(Variable),
    /// A constant. A blank node constant in a CONSTRUCT template is minted
    /// fresh for every solution.
    Const(Term),
    Quoted(Box<QuotedPattern>),
}

impl PatternTerm {
    pub fn var(name: &str) -> Self {
        PatternTerm::Var(Variable::new(name))
    }

    pub fn as_var(&self) -> Option<&Variable> {
        match self {
            PatternTerm::Var(v) => Some(v),
            _ => None,
        }
    }

    /// Number of constant leaves, used for join ordering.
    pub fn constant_count(&self) -> usize {
        match self {
            PatternTerm::Var(_) => 0,
            PatternTerm::Const(_) => 1,
            PatternTerm::Quoted(q) => q.constant_count(),
        }
    }

    pub fn collect_vars(&self, out: &mut Vec<Variable>) {
        match self {
            PatternTerm::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone())
                }
            }
            PatternTerm::Const(_) => {}
            PatternTerm::Quoted(q) => {
                q.subject.collect_vars(out);
                q.predicate.collect_vars(out);
                q.object.collect_vars(out);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuotedPattern {
    pub subject: PatternTerm,
    /// Constant IRI or variable.
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

impl QuotedPattern {
    pub fn constant_count(&self) -> usize {
        self.subject.constant_count() + self.predicate.constant_count() + self.object.constant_count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TriplePattern {
    /// `s p o` with an optional `@ ?T` binding the matched fact's timestamp.
    Triple {
        subject: PatternTerm,
        predicate: PatternTerm,
        object: PatternTerm,
        timestamp: Option<Variable>,
    },
    /// A standalone `<< s p o >> @ ?T`: matches any fact that has the quoted
    /// triple as its subject. In a CONSTRUCT template it asserts `s p o`.
    Mention {
        quoted: QuotedPattern,
        timestamp: Option<Variable>,
    },
}

impl TriplePattern {
    pub fn triple(subject: PatternTerm, predicate: PatternTerm, object: PatternTerm) -> Self {
        TriplePattern::Triple {
            subject,
            predicate,
            object,
            timestamp: None,
        }
    }

    pub fn timestamp_var(&self) -> Option<&Variable> {
        match self {
            TriplePattern::Triple { timestamp, .. } | TriplePattern::Mention { timestamp, .. } => {
                timestamp.as_ref()
            }
        }
    }

    /// Variables in textual order, timestamp variable last.
    pub fn variables(&self) -> Vec<Variable> {
        let mut out = Vec::new();
        match self {
            TriplePattern::Triple {
                subject,
                predicate,
                object,
                ..
            } => {
                subject.collect_vars(&mut out);
                predicate.collect_vars(&mut out);
                object.collect_vars(&mut out);
            }
            TriplePattern::Mention { quoted, .. } => {
                quoted.subject.collect_vars(&mut out);
                quoted.predicate.collect_vars(&mut out);
                quoted.object.collect_vars(&mut out);
            }
        }
        if let Some(t) = self.timestamp_var() {
            if !out.contains(t) {
                out.push(t.clone());
            }
        }
        out
    }

    pub fn constant_count(&self) -> usize {
        match self {
            TriplePattern::Triple {
                subject,
                predicate,
                object,
                ..
            } => subject.constant_count() + predicate.constant_count() + object.constant_count(),
            TriplePattern::Mention { quoted, .. } => quoted.constant_count(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WindowSpec {
    /// Facts stamped exactly with the current tick.
    Now,
    /// Facts stamped in `(t - n, t]`, `n >= 1`.
    Range(Tick),
}

impl WindowSpec {
    pub fn contains(self, now: Tick, ts: Tick) -> bool {
        match self {
            WindowSpec::Now => ts == now,
            WindowSpec::Range(n) => ts <= now && ts + n > now,
        }
    }

    pub fn span(self) -> Tick {
        match self {
            WindowSpec::Now => 1,
            WindowSpec::Range(n) => n,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Builtin {
    Iou,
}

impl Builtin {
    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "iou" => Some(Builtin::Iou),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Iou => "iou",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Builtin::Iou => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    And,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Add,
    Sub,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::And => "&&",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
            BinOp::Eq => "=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            BinOp::And => 1,
            BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge | BinOp::Eq => 2,
            BinOp::Add | BinOp::Sub => 3,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 2
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum FilterExpr {
    Var(Variable),
    Const(Term),
    Call(Builtin, Vec<FilterExpr>),
    Binary(BinOp, Box<FilterExpr>, Box<FilterExpr>),
}

impl FilterExpr {
    pub fn binary(op: BinOp, lhs: FilterExpr, rhs: FilterExpr) -> Self {
        FilterExpr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn variables(&self) -> Vec<Variable> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<Variable>) {
        match self {
            FilterExpr::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone())
                }
            }
            FilterExpr::Const(_) => {}
            FilterExpr::Call(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            FilterExpr::Binary(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    /// Splits a `&&` chain into its conjuncts, left to right.
    pub fn conjuncts(&self) -> Vec<&FilterExpr> {
        match self {
            FilterExpr::Binary(BinOp::And, l, r) => {
                let mut out = l.conjuncts();
                out.extend(r.conjuncts());
                out
            }
            other => vec![other],
        }
    }

    /// Rebuilds a left-nested `&&` chain. `None` for an empty list.
    pub fn conjunction(parts: Vec<FilterExpr>) -> Option<FilterExpr> {
        parts
            .into_iter()
            .reduce(|acc, next| FilterExpr::binary(BinOp::And, acc, next))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StreamBlock {
    pub stream: StreamId,
    pub window: WindowSpec,
    /// `@?Te` on the block header: all facts matched by the block share one
    /// timestamp, bound to this variable.
    pub timestamp: Option<Variable>,
    pub patterns: Vec<TriplePattern>,
    pub filters: Vec<FilterExpr>,
}

impl StreamBlock {
    pub fn new(stream: StreamId, window: WindowSpec) -> Self {
        StreamBlock {
            stream,
            window,
            timestamp: None,
            patterns: Vec::new(),
            filters: Vec::new(),
        }
    }

    /// Variables bound by the block's patterns (and header timestamp).
    pub fn bound_variables(&self) -> Vec<Variable> {
        let mut out: Vec<Variable> = Vec::new();
        for p in &self.patterns {
            for v in p.variables() {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        if let Some(t) = &self.timestamp {
            if !out.contains(t) {
                out.push(t.clone());
            }
        }
        out
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct BodySpec {
    pub positive: Vec<StreamBlock>,
    pub naf: Vec<StreamBlock>,
    pub filters: Vec<FilterExpr>,
    pub static_patterns: Vec<TriplePattern>,
}

impl BodySpec {
    /// Every filter that constrains positive bindings: block filters in block
    /// order, then WHERE-level filters.
    pub fn positive_filters(&self) -> impl Iterator<Item = &FilterExpr> {
        self.positive
            .iter()
            .flat_map(|b| b.filters.iter())
            .chain(self.filters.iter())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleKind {
    Hard,
    Soft,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    pub id: Iri,
    pub kind: RuleKind,
    pub head: Vec<TriplePattern>,
    pub body: BodySpec,
}

impl Rule {
    /// Stream that constructed facts are routed to: the first positive
    /// block's stream, if any.
    pub fn home_stream(&self) -> Option<&StreamId> {
        self.body.positive.first().map(|b| &b.stream)
    }
}
