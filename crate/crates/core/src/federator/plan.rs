use std::collections::{BTreeMap, BTreeSet};

use crate::ql::{BinOp, BodySpec, FilterExpr, PatternTerm, Rule, RuleKind, StreamBlock, TriplePattern, Variable, WindowSpec};
use crate::rdf::vocab::fed;
use crate::rdf::{Iri, StreamId, Term};

pub type NodeId = String;

/// How to reach a node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Endpoint {
    InProc,
    /// Started here and listening on this address (port 0: any).
    Tcp(String),
    /// Run by another process; only dialled.
    Remote(String),
}

/// A node and the streams it owns, with the predicates each stream
/// carries (empty: not advertised, anything may appear).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeDescriptor {
    pub id: NodeId,
    pub endpoint: Endpoint,
    pub streams: BTreeMap<StreamId, BTreeSet<Iri>>,
}

impl NodeDescriptor {
    pub fn new(id: impl Into<NodeId>, endpoint: Endpoint) -> Self {
        NodeDescriptor {
            id: id.into(),
            endpoint,
            streams: BTreeMap::new(),
        }
    }

    pub fn with_stream(mut self, stream: StreamId, predicates: impl IntoIterator<Item = Iri>) -> Self {
        self.streams.insert(stream, predicates.into_iter().collect());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PlanError {
    #[error("rule {rule}: stream {stream} is not advertised by any node")]
    Unadvertised { rule: Iri, stream: StreamId },
    #[error("stream {stream} is advertised by several nodes: {}", nodes.join(", "))]
    Ambiguous { stream: StreamId, nodes: Vec<NodeId> },
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("duplicate node {0}")]
    DuplicateNode(NodeId),
}

/// Every node of a federation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Registry {
    nodes: Vec<NodeDescriptor>,
}

impl Registry {
    pub fn new(nodes: Vec<NodeDescriptor>) -> Result<Self, PlanError> {
        let mut seen = BTreeSet::new();
        for n in &nodes {
            if !seen.insert(&n.id) {
                return Err(PlanError::DuplicateNode(n.id.clone()));
            }
        }
        Ok(Registry { nodes })
    }

    pub fn nodes(&self) -> &[NodeDescriptor] {
        &self.nodes
    }

    pub fn node(&self, id: &str) -> Option<&NodeDescriptor> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// The single node advertising `stream`, if any.
    pub fn owner(&self, stream: &StreamId) -> Result<Option<&NodeDescriptor>, PlanError> {
        let owners: Vec<&NodeDescriptor> = self.nodes.iter().filter(|n| n.streams.contains_key(stream)).collect();
        match owners.as_slice() {
            [] => Ok(None),
            [one] => Ok(Some(*one)),
            many => Err(PlanError::Ambiguous {
                stream: stream.clone(),
                nodes: many.iter().map(|n| n.id.clone()).collect(),
            }),
        }
    }
}

/// A subquery installed on a stream owner. Its rule emits one row per
/// binding of the block into `sink`: `_:row fed:row <sink>` plus
/// `_:row <sink>_<i> ?v` for each exported variable.
#[derive(Clone, Debug, PartialEq)]
pub struct Fragment {
    pub target: NodeId,
    pub sink: StreamId,
    pub rule: Rule,
    pub exports: Vec<Variable>,
    /// Exported variables the root joins or uses.
    pub join_vars: Vec<Variable>,
    /// Filter conjuncts evaluated at the target.
    pub pushed: Vec<FilterExpr>,
    /// The fragment replaces a NAF block.
    pub negated: bool,
}

/// A rule split into subqueries for stream owners and a root rule that
/// composes their rows.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryPlan {
    pub root: NodeId,
    pub original: Rule,
    pub rule: Rule,
    pub fragments: Vec<Fragment>,
}

impl QueryPlan {
    /// Pushdown soundness: every filter a fragment evaluates only uses
    /// variables its block binds, and every export is bound there.
    pub fn check(&self) -> Result<(), String> {
        for f in &self.fragments {
            let block = f.rule.body.positive.first().ok_or_else(|| format!("{} has no block", f.sink))?;
            let bound = block.bound_variables();
            for e in &f.pushed {
                if let Some(v) = e.variables().into_iter().find(|v| !bound.contains(v)) {
                    return Err(format!("{}: pushed filter uses unbound {v}", f.sink));
                }
            }
            if let Some(v) = f.exports.iter().find(|v| !bound.contains(v)) {
                return Err(format!("{}: export {v} is not bound", f.sink));
            }
        }
        Ok(())
    }

    pub fn sinks(&self) -> impl Iterator<Item = &StreamId> {
        self.fragments.iter().map(|f| &f.sink)
    }
}

pub fn row_predicate() -> Iri {
    fed("row")
}

/// Predicate carrying export `i` of the fragment writing to `sink`.
pub fn column_predicate(sink: &StreamId, i: usize) -> Iri {
    Iri::new(format!("{}_{i}", sink.iri().as_str()))
}

/// Splits rules into fragments with fresh sink names.
#[derive(Debug, Default)]
pub struct Rewriter {
    next: u64,
}

impl Rewriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Plans `rule` for evaluation at `root`. Blocks over streams the root
    /// owns stay in place; every other block becomes a fragment on its
    /// stream's owner, taking along each filter conjunct whose variables
    /// the block binds. The root joins fragment rows and keeps the rest.
    pub fn rewrite(&mut self, rule: &Rule, registry: &Registry, root: &str) -> Result<QueryPlan, PlanError> {
        if registry.node(root).is_none() {
            return Err(PlanError::UnknownNode(root.to_string()));
        }
        let owner_of = |b: &StreamBlock| -> Result<NodeId, PlanError> {
            match registry.owner(&b.stream)? {
                Some(n) => Ok(n.id.clone()),
                None => Err(PlanError::Unadvertised {
                    rule: rule.id.clone(),
                    stream: b.stream.clone(),
                }),
            }
        };
        let pos_owners = rule.body.positive.iter().map(owner_of).collect::<Result<Vec<_>, _>>()?;
        let naf_owners = rule.body.naf.iter().map(owner_of).collect::<Result<Vec<_>, _>>()?;
        for (b, o) in rule.body.positive.iter().chain(&rule.body.naf).zip(pos_owners.iter().chain(&naf_owners)) {
            warn_unadvertised(b, registry.node(o).expect("owner is registered"));
        }
        if pos_owners.iter().chain(&naf_owners).all(|o| o == root) {
            return Ok(QueryPlan {
                root: root.to_string(),
                original: rule.clone(),
                rule: rule.clone(),
                fragments: Vec::new(),
            });
        }

        let all_vars = rule_variables(rule);
        let mut taken: BTreeSet<String> = all_vars.iter().map(|v| v.name().to_string()).collect();

        // Conjuncts over the positive part, tagged with the block they came
        // from (None for WHERE-level filters).
        let mut conjuncts: Vec<(Option<usize>, FilterExpr)> = Vec::new();
        for (i, b) in rule.body.positive.iter().enumerate() {
            for f in &b.filters {
                conjuncts.extend(f.conjuncts().into_iter().map(|c| (Some(i), c.clone())));
            }
        }
        for f in &rule.body.filters {
            conjuncts.extend(f.conjuncts().into_iter().map(|c| (None, c.clone())));
        }
        let remote: Vec<bool> = pos_owners.iter().map(|o| o != root).collect();
        let bound: Vec<Vec<Variable>> = rule.body.positive.iter().map(StreamBlock::bound_variables).collect();
        let fits = |c: &FilterExpr, i: usize| c.variables().iter().all(|v| bound[i].contains(v));
        let pushed_to: Vec<Vec<usize>> = conjuncts
            .iter()
            .map(|(_, c)| (0..bound.len()).filter(|&i| remote[i] && fits(c, i)).collect())
            .collect();

        let mut fragments = Vec::new();
        let mut positive = Vec::new();
        for (i, b) in rule.body.positive.iter().enumerate() {
            let residual: Vec<FilterExpr> = conjuncts
                .iter()
                .zip(&pushed_to)
                .filter(|((origin, _), to)| *origin == Some(i) && to.is_empty())
                .map(|((_, c), _)| c.clone())
                .collect();
            if !remote[i] {
                positive.push(StreamBlock {
                    filters: conjoin(residual),
                    ..b.clone()
                });
                continue;
            }
            let pushed: Vec<FilterExpr> = conjuncts
                .iter()
                .zip(&pushed_to)
                .filter(|(_, to)| to.contains(&i))
                .map(|((_, c), _)| c.clone())
                .collect();
            let (frag, sub) = self.fragment(b, pushed, residual, &pos_owners[i], false, &mut taken);
            fragments.push(frag);
            positive.push(sub);
        }
        let mut naf = Vec::new();
        for (k, b) in rule.body.naf.iter().enumerate() {
            if naf_owners[k] == root {
                naf.push(b.clone());
                continue;
            }
            let bv = b.bound_variables();
            let (pushed, residual): (Vec<FilterExpr>, Vec<FilterExpr>) = b
                .filters
                .iter()
                .flat_map(|f| f.conjuncts().into_iter().cloned())
                .partition(|c| c.variables().iter().all(|v| bv.contains(v)));
            let (frag, sub) = self.fragment(b, pushed, residual, &naf_owners[k], true, &mut taken);
            fragments.push(frag);
            naf.push(sub);
        }
        let mut filters: Vec<FilterExpr> = conjuncts
            .iter()
            .zip(&pushed_to)
            .filter(|((origin, _), to)| origin.is_none() && to.is_empty())
            .map(|((_, c), _)| c.clone())
            .collect();
        // A soft rule's confidence is read from its last `expr > c`
        // conjunct; keep a copy at the root if that conjunct was pushed.
        if rule.kind == RuleKind::Soft {
            let evidence = conjuncts.iter().rposition(|(_, c)| {
                matches!(c, FilterExpr::Binary(BinOp::Gt | BinOp::Ge, _, rhs) if matches!(**rhs, FilterExpr::Const(_)))
            });
            if let Some(e) = evidence.filter(|&e| !pushed_to[e].is_empty()) {
                filters.push(conjuncts[e].1.clone());
            }
        }
        let body = BodySpec {
            positive,
            naf,
            static_patterns: rule.body.static_patterns.clone(),
            filters: conjoin(filters),
        };
        let root_rule = Rule {
            id: rule.id.clone(),
            kind: rule.kind,
            head: rule.head.clone(),
            body,
        };
        let used = used_outside_fragments(&root_rule);
        for f in &mut fragments {
            f.join_vars = f.exports.iter().filter(|v| used.contains(v)).cloned().collect();
        }
        Ok(QueryPlan {
            root: root.to_string(),
            original: rule.clone(),
            rule: root_rule,
            fragments,
        })
    }

    /// The fragment for one remote block and the block that replaces it
    /// at the root.
    fn fragment(
        &mut self,
        block: &StreamBlock,
        pushed: Vec<FilterExpr>,
        residual: Vec<FilterExpr>,
        target: &str,
        negated: bool,
        taken: &mut BTreeSet<String>,
    ) -> (Fragment, StreamBlock) {
        self.next += 1;
        let name = format!("sub{}", self.next);
        let sink = StreamId(fed(&name));
        let exports = block.bound_variables();
        let row_label = PatternTerm::Const(Term::blank("row"));
        let iri = |i: Iri| PatternTerm::Const(Term::Iri(i));
        let mut head = vec![TriplePattern::triple(row_label.clone(), iri(row_predicate()), iri(sink.iri().clone()))];
        for (i, v) in exports.iter().enumerate() {
            head.push(TriplePattern::triple(
                row_label.clone(),
                iri(column_predicate(&sink, i)),
                PatternTerm::Var(v.clone()),
            ));
        }
        let rule = Rule {
            id: sink.iri().clone(),
            kind: RuleKind::Hard,
            head,
            body: BodySpec {
                positive: vec![StreamBlock {
                    filters: conjoin(pushed.clone()),
                    ..block.clone()
                }],
                ..Default::default()
            },
        };
        let mut row_var = format!("row{}", self.next);
        while taken.contains(&row_var) {
            row_var.push('_');
        }
        taken.insert(row_var.clone());
        let rv = PatternTerm::var(&row_var);
        let mut patterns = vec![TriplePattern::triple(rv.clone(), iri(row_predicate()), iri(sink.iri().clone()))];
        for (i, v) in exports.iter().enumerate() {
            patterns.push(TriplePattern::triple(
                rv.clone(),
                iri(column_predicate(&sink, i)),
                PatternTerm::Var(v.clone()),
            ));
        }
        let sub = StreamBlock {
            stream: sink.clone(),
            window: WindowSpec::Now,
            timestamp: None,
            patterns,
            filters: conjoin(residual),
        };
        let frag = Fragment {
            target: target.to_string(),
            sink,
            rule,
            exports,
            join_vars: Vec::new(),
            pushed,
            negated,
        };
        (frag, sub)
    }
}

fn conjoin(parts: Vec<FilterExpr>) -> Vec<FilterExpr> {
    FilterExpr::conjunction(parts).into_iter().collect()
}

fn warn_unadvertised(block: &StreamBlock, owner: &NodeDescriptor) {
    let Some(preds) = owner.streams.get(&block.stream).filter(|p| !p.is_empty()) else {
        return;
    };
    for p in &block.patterns {
        if let TriplePattern::Triple {
            predicate: PatternTerm::Const(Term::Iri(i)),
            ..
        } = p
        {
            if !preds.contains(i) {
                log::warn!("{} does not advertise {} on {}", owner.id, i, block.stream);
            }
        }
    }
}

fn rule_variables(rule: &Rule) -> BTreeSet<Variable> {
    let mut out = BTreeSet::new();
    for b in rule.body.positive.iter().chain(&rule.body.naf) {
        out.extend(b.bound_variables());
        for f in &b.filters {
            out.extend(f.variables());
        }
    }
    for p in rule.head.iter().chain(&rule.body.static_patterns) {
        out.extend(p.variables());
    }
    for f in &rule.body.filters {
        out.extend(f.variables());
    }
    out
}

/// Variables a root rule mentions, counting each row block only for the
/// variables it shares with the rest of the rule.
fn used_outside_fragments(root: &Rule) -> BTreeSet<Variable> {
    let mut counts: BTreeMap<Variable, usize> = BTreeMap::new();
    let mut add = |vs: Vec<Variable>| {
        for v in vs.into_iter().collect::<BTreeSet<_>>() {
            *counts.entry(v).or_insert(0) += 1;
        }
    };
    for b in root.body.positive.iter().chain(&root.body.naf) {
        add(b.bound_variables());
        add(b.filters.iter().flat_map(FilterExpr::variables).collect());
    }
    add(root.head.iter().chain(&root.body.static_patterns).flat_map(TriplePattern::variables).collect());
    add(root.body.filters.iter().flat_map(FilterExpr::variables).collect());
    counts.into_iter().filter(|(_, n)| *n > 1).map(|(v, _)| v).collect()
}
