use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::mpsc;

use super::binding::{match_fact, Binding};
use super::error::RuntimeError;
use super::filter::{eval, eval_filter, EvalError, GeometryLookup};
use super::join::{hash_join, join_order, row_vars};
use super::stratify::stratify;
use super::window::BlockState;
use crate::geom::BBox;
use crate::ql::{
    evidence_expr, print_expr, print_pattern, FilterExpr, PatternTerm, QuotedPattern, Rule, RuleKind,
    TriplePattern, Variable,
};
use crate::rdf::vocab::{self, PrefixMap};
use crate::rdf::{Iri, StaticGraph, StreamId, Term, Tick, TimestampedFact, Triple};

/// Same-tick fixpoint iterations stop after this many rounds.
pub const DEFAULT_FIXPOINT_CAP: usize = 16;

#[derive(Clone, Debug)]
pub struct RuntimeConfig {
    /// Re-run a stratum until its hard rules derive nothing new.
    pub same_tick_fixpoint: bool,
    pub fixpoint_cap: usize,
    /// Output stream of rules that read no stream.
    pub default_output: StreamId,
    /// Ingest derived facts into their rule's home stream. Off for engines
    /// whose output leaves the node.
    pub feedback: bool,
}

impl Default for RuntimeConfig {
    fn default() -> Self {
        RuntimeConfig {
            same_tick_fixpoint: false,
            fixpoint_cap: DEFAULT_FIXPOINT_CAP,
            default_output: StreamId(vocab::ns("out")),
            feedback: true,
        }
    }
}

/// One instantiation of a rule: the binding, the head facts it would
/// assert and the evidence behind it.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub rule: Iri,
    pub kind: RuleKind,
    pub tick: Tick,
    pub stream: StreamId,
    pub binding: Binding,
    pub facts: Vec<TimestampedFact>,
    /// Value of the rule's evidence expression, clamped to [0, 1]; 1 when
    /// the rule has none.
    pub confidence: f64,
    /// Body patterns instantiated with the binding.
    pub evidence: Vec<String>,
    /// Positive filter conjuncts instantiated with the binding and their
    /// left-hand values.
    pub filters: Vec<String>,
}

/// What a resolver keeps of one candidate. The facts may differ from the
/// candidate's own head facts (e.g. normalized).
#[derive(Clone, Debug, PartialEq)]
pub struct Resolution {
    pub candidate: usize,
    pub facts: Vec<TimestampedFact>,
}

/// Chooses among the soft candidates of one stratum.
pub trait HypothesisResolver {
    fn resolve(&mut self, tick: Tick, candidates: &[Candidate]) -> Vec<Resolution>;
}

/// Keeps every candidate as is.
#[derive(Clone, Copy, Debug, Default)]
pub struct AcceptAll;

impl HypothesisResolver for AcceptAll {
    fn resolve(&mut self, _: Tick, candidates: &[Candidate]) -> Vec<Resolution> {
        candidates
            .iter()
            .enumerate()
            .map(|(i, c)| Resolution {
                candidate: i,
                facts: c.facts.clone(),
            })
            .collect()
    }
}

/// A fact emitted by a rule at the end of a tick.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Emitted {
    pub rule: Iri,
    pub stream: StreamId,
    pub fact: TimestampedFact,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Diagnostics {
    /// Bindings discarded because a filter could not be evaluated.
    pub filter_errors: u64,
    /// Bindings discarded because a builtin lacked data (e.g. geometry).
    pub builtin_errors: u64,
    /// Head patterns that could not be instantiated.
    pub head_errors: u64,
    /// Mailbox batches rejected at drain time.
    pub rejected_pushes: u64,
    /// Facts older than every window that reads them.
    pub late_facts: u64,
    /// Strata that hit the fixpoint iteration cap.
    pub fixpoint_cap_hits: u64,
}

type Sink = Box<dyn FnMut(&StreamId, &TimestampedFact) + Send>;

struct CompiledRule {
    rule: Rule,
    positive: Vec<usize>,
    naf: Vec<usize>,
    home: StreamId,
    /// Per positive block: filters checked right after the block joins.
    early_filters: Vec<Vec<FilterExpr>>,
    late_filters: Vec<FilterExpr>,
    evidence: Option<FilterExpr>,
}

#[derive(Default)]
struct Geometry {
    partial: HashMap<Term, [Option<f64>; 4]>,
    boxes: HashMap<Term, BBox>,
}

impl Geometry {
    fn observe(&mut self, fact: &TimestampedFact, preds: &[Iri; 4]) {
        let Some(slot) = preds.iter().position(|p| p == fact.predicate()) else {
            return;
        };
        let Some(v) = fact.object().numeric_value() else {
            return;
        };
        let entry = self.partial.entry(fact.subject().clone()).or_default();
        entry[slot] = Some(v);
        if let [Some(x), Some(y), Some(w), Some(h)] = *entry {
            if let Some(b) = BBox::new(x, y, w, h) {
                self.boxes.insert(fact.subject().clone(), b);
            }
        }
    }
}

impl GeometryLookup for Geometry {
    fn bbox(&self, term: &Term) -> Option<BBox> {
        self.boxes.get(term).copied()
    }
}

/// Continuous evaluation of a rule set over named streams.
pub struct Engine {
    config: RuntimeConfig,
    streams: BTreeMap<StreamId, Option<Tick>>,
    rules: Vec<CompiledRule>,
    strata: Vec<Vec<usize>>,
    blocks: Vec<BlockState>,
    readers: HashMap<StreamId, Vec<usize>>,
    graph: StaticGraph,
    geometry: Geometry,
    geometry_preds: [Iri; 4],
    last_tick: Option<Tick>,
    diagnostics: Diagnostics,
    sinks: Vec<Sink>,
    mailbox_tx: mpsc::Sender<(StreamId, Vec<TimestampedFact>)>,
    mailbox_rx: mpsc::Receiver<(StreamId, Vec<TimestampedFact>)>,
    fresh: u64,
    prefixes: PrefixMap,
}

impl Engine {
    pub fn new(config: RuntimeConfig) -> Self {
        let (mailbox_tx, mailbox_rx) = mpsc::channel();
        Engine {
            config,
            streams: BTreeMap::new(),
            rules: Vec::new(),
            strata: Vec::new(),
            blocks: Vec::new(),
            readers: HashMap::new(),
            graph: StaticGraph::new(),
            geometry: Geometry::default(),
            geometry_preds: [vocab::ns("x"), vocab::ns("y"), vocab::ns("w"), vocab::ns("h")],
            last_tick: None,
            diagnostics: Diagnostics::default(),
            sinks: Vec::new(),
            mailbox_tx,
            mailbox_rx,
            fresh: 0,
            prefixes: PrefixMap::prelude(),
        }
    }

    pub fn config(&self) -> &RuntimeConfig {
        &self.config
    }

    pub fn register_stream(&mut self, id: StreamId) -> Result<(), RuntimeError> {
        if self.streams.contains_key(&id) {
            return Err(RuntimeError::DuplicateStream(id));
        }
        self.streams.insert(id, None);
        Ok(())
    }

    pub fn is_registered(&self, id: &StreamId) -> bool {
        self.streams.contains_key(id)
    }

    pub fn streams(&self) -> impl Iterator<Item = &StreamId> {
        self.streams.keys()
    }

    /// Replaces the active rule set. Every stream a rule reads must be
    /// registered, and the rules must be stratifiable.
    pub fn load_rules(&mut self, rules: Vec<Rule>) -> Result<(), RuntimeError> {
        for r in &rules {
            for b in r.body.positive.iter().chain(r.body.naf.iter()) {
                if !self.streams.contains_key(&b.stream) {
                    return Err(RuntimeError::RuleStreamMissing {
                        rule: r.id.clone(),
                        stream: b.stream.clone(),
                    });
                }
            }
        }
        let strata = stratify(&rules).map_err(RuntimeError::NotStratifiable)?;
        self.blocks.clear();
        self.readers.clear();
        self.rules.clear();
        for rule in rules {
            let mut positive = Vec::new();
            let mut naf = Vec::new();
            let mut early_filters = Vec::new();
            let mut late_filters = Vec::new();
            let mut bound: Vec<Variable> = Vec::new();
            for b in &rule.body.positive {
                positive.push(self.add_block(b.clone()));
                for v in b.bound_variables() {
                    if !bound.contains(&v) {
                        bound.push(v);
                    }
                }
                let (early, late): (Vec<_>, Vec<_>) = b
                    .filters
                    .iter()
                    .cloned()
                    .partition(|f| f.variables().iter().all(|v| bound.contains(v)));
                early_filters.push(early);
                late_filters.extend(late);
            }
            late_filters.extend(rule.body.filters.iter().cloned());
            for b in &rule.body.naf {
                naf.push(self.add_block(b.clone()));
            }
            let home = rule
                .home_stream()
                .cloned()
                .unwrap_or_else(|| self.config.default_output.clone());
            let evidence = evidence_expr(&rule.body).cloned();
            self.rules.push(CompiledRule {
                rule,
                positive,
                naf,
                home,
                early_filters,
                late_filters,
                evidence,
            });
        }
        self.strata = strata;
        Ok(())
    }

    fn add_block(&mut self, block: crate::ql::StreamBlock) -> usize {
        let idx = self.blocks.len();
        self.readers.entry(block.stream.clone()).or_default().push(idx);
        let mut state = BlockState::new(block);
        if let Some(t) = self.last_tick {
            state.advance(t);
        }
        self.blocks.push(state);
        idx
    }

    pub fn rules(&self) -> impl Iterator<Item = &Rule> {
        self.rules.iter().map(|c| &c.rule)
    }

    /// Rule indices per stratum, lowest first.
    pub fn strata(&self) -> &[Vec<usize>] {
        &self.strata
    }

    pub fn static_graph(&self) -> &StaticGraph {
        &self.graph
    }

    pub fn static_graph_mut(&mut self) -> &mut StaticGraph {
        &mut self.graph
    }

    pub fn diagnostics(&self) -> Diagnostics {
        self.diagnostics
    }

    pub fn last_tick(&self) -> Option<Tick> {
        self.last_tick
    }

    pub fn bbox(&self, term: &Term) -> Option<BBox> {
        self.geometry.bbox(term)
    }

    /// Registers an output callback. Sinks run on the evaluation thread and
    /// must not block.
    pub fn add_sink(&mut self, sink: impl FnMut(&StreamId, &TimestampedFact) + Send + 'static) {
        self.sinks.push(Box::new(sink));
    }

    /// A handle other threads can push through. Batches are drained at the
    /// start of the next `evaluate_tick`.
    pub fn mailbox(&self) -> mpsc::Sender<(StreamId, Vec<TimestampedFact>)> {
        self.mailbox_tx.clone()
    }

    /// Appends facts to a stream. Timestamps must not go backwards on a
    /// stream; a batch with an out-of-order fact is rejected whole.
    pub fn push(&mut self, id: &StreamId, facts: Vec<TimestampedFact>) -> Result<(), RuntimeError> {
        let last = *self
            .streams
            .get(id)
            .ok_or_else(|| RuntimeError::UnknownStream(id.clone()))?;
        let mut cursor = last;
        for f in &facts {
            if let Some(l) = cursor {
                if f.timestamp() < l {
                    return Err(RuntimeError::OutOfOrder {
                        stream: id.clone(),
                        last: l,
                        got: f.timestamp(),
                    });
                }
            }
            cursor = Some(f.timestamp());
        }
        self.streams.insert(id.clone(), cursor);
        for f in &facts {
            self.ingest(id, f);
        }
        Ok(())
    }

    fn ingest(&mut self, id: &StreamId, fact: &TimestampedFact) {
        self.geometry.observe(fact, &self.geometry_preds);
        if let Some(readers) = self.readers.get(id) {
            let mut stored = false;
            for &b in readers {
                let before = self.blocks[b].window.buffered();
                self.blocks[b].insert(fact);
                stored |= self.blocks[b].window.buffered() > before;
            }
            if !stored {
                self.diagnostics.late_facts += 1;
            }
        }
    }

    fn drain_mailbox(&mut self) {
        while let Ok((id, facts)) = self.mailbox_rx.try_recv() {
            if let Err(e) = self.push(&id, facts) {
                log::warn!("mailbox push rejected: {e}");
                self.diagnostics.rejected_pushes += 1;
            }
        }
    }

    /// Evaluates every rule at tick `t` with all soft candidates accepted.
    pub fn evaluate_tick(&mut self, t: Tick) -> Result<Vec<Emitted>, RuntimeError> {
        self.evaluate_tick_with(t, &mut AcceptAll)
    }

    /// Evaluates every rule at tick `t`, stratum by stratum. Soft candidates
    /// of each stratum go through `resolver`; accepted facts feed back into
    /// their rule's home stream and are visible to later strata.
    pub fn evaluate_tick_with(
        &mut self,
        t: Tick,
        resolver: &mut dyn HypothesisResolver,
    ) -> Result<Vec<Emitted>, RuntimeError> {
        if let Some(last) = self.last_tick {
            if t <= last {
                return Err(RuntimeError::TickRegression { last, got: t });
            }
        }
        self.drain_mailbox();
        self.last_tick = Some(t);
        for b in &mut self.blocks {
            b.advance(t);
        }
        let mut emitted: Vec<(Iri, Binding, usize, Emitted)> = Vec::new();
        let strata = self.strata.clone();
        for stratum in &strata {
            let mut seen: BTreeSet<(StreamId, TimestampedFact)> = BTreeSet::new();
            let mut rounds = 0;
            let soft = loop {
                rounds += 1;
                let mut hard = Vec::new();
                let mut soft = Vec::new();
                for &ri in stratum {
                    for c in self.candidates(ri, t) {
                        match c.kind {
                            RuleKind::Hard => hard.push(c),
                            RuleKind::Soft => soft.push(c),
                        }
                    }
                }
                let mut new_facts = false;
                for c in hard {
                    for (pos, f) in c.facts.iter().enumerate() {
                        if seen.insert((c.stream.clone(), f.clone())) {
                            new_facts = true;
                            if self.config.feedback {
                                self.ingest(&c.stream, f);
                            }
                            emitted.push((
                                c.rule.clone(),
                                c.binding.clone(),
                                pos,
                                Emitted {
                                    rule: c.rule.clone(),
                                    stream: c.stream.clone(),
                                    fact: f.clone(),
                                },
                            ));
                        }
                    }
                }
                if !self.config.same_tick_fixpoint || !new_facts {
                    break soft;
                }
                if rounds >= self.config.fixpoint_cap {
                    self.diagnostics.fixpoint_cap_hits += 1;
                    break soft;
                }
            };
            if soft.is_empty() {
                continue;
            }
            for r in resolver.resolve(t, &soft) {
                let Some(c) = soft.get(r.candidate) else { continue };
                for (pos, f) in r.facts.into_iter().enumerate() {
                    if seen.insert((c.stream.clone(), f.clone())) {
                        if self.config.feedback {
                            self.ingest(&c.stream, &f);
                        }
                        emitted.push((
                            c.rule.clone(),
                            c.binding.clone(),
                            pos,
                            Emitted {
                                rule: c.rule.clone(),
                                stream: c.stream.clone(),
                                fact: f,
                            },
                        ));
                    }
                }
            }
        }
        emitted.sort_by(|a, b| (&a.0, &a.1, a.2, &a.3).cmp(&(&b.0, &b.1, b.2, &b.3)));
        let mut out_seen = BTreeSet::new();
        let out: Vec<Emitted> = emitted
            .into_iter()
            .map(|e| e.3)
            .filter(|e| out_seen.insert((e.stream.clone(), e.fact.clone())))
            .collect();
        for e in &out {
            for s in &mut self.sinks {
                s(&e.stream, &e.fact);
            }
        }
        Ok(out)
    }

    /// All candidates of rule `ri` at tick `t`, sorted by binding.
    fn candidates(&mut self, ri: usize, t: Tick) -> Vec<Candidate> {
        let bindings = self.solve(ri, t);
        let rule = &self.rules[ri];
        let mut out = Vec::with_capacity(bindings.len());
        let mut head_errors = 0;
        for b in bindings {
            let mut facts = Vec::new();
            let mut fresh = BTreeMap::new();
            for p in &rule.rule.head {
                match instantiate_head(p, &b, t, &mut fresh, &mut self.fresh) {
                    Some(f) => facts.push(f),
                    None => head_errors += 1,
                }
            }
            if facts.is_empty() {
                continue;
            }
            let confidence = match &rule.evidence {
                Some(e) => match eval(e, &b, &self.geometry) {
                    Ok(v) => v.as_num().map_or(1.0, |x| x.clamp(0.0, 1.0)),
                    Err(_) => 1.0,
                },
                None => 1.0,
            };
            let evidence = evidence_lines(&rule.rule, &b, &self.prefixes);
            let filters = filter_trace(&rule.rule, &b, &self.geometry, &self.prefixes);
            out.push(Candidate {
                rule: rule.rule.id.clone(),
                kind: rule.rule.kind,
                tick: t,
                stream: rule.home.clone(),
                binding: b,
                facts,
                confidence,
                evidence,
                filters,
            });
        }
        self.diagnostics.head_errors += head_errors;
        out
    }

    /// Bindings of rule `ri` that satisfy its positive blocks, static
    /// patterns and filters and have no NAF extension. Sorted, distinct.
    fn solve(&mut self, ri: usize, _t: Tick) -> Vec<Binding> {
        let rule = &self.rules[ri];
        let mut domain: Vec<Variable> = Vec::new();
        let mut rel = vec![Binding::new()];
        let mut filter_errors = 0;
        let mut builtin_errors = 0;
        let mut keep = |f: &FilterExpr, b: &Binding, geo: &Geometry| match eval_filter(f, b, geo) {
            Ok(v) => v,
            Err(EvalError::MissingGeometry(_)) => {
                builtin_errors += 1;
                false
            }
            Err(_) => {
                filter_errors += 1;
                false
            }
        };
        for (bi, &block) in rule.positive.iter().enumerate() {
            rel = join_block(&self.blocks[block], rel, &mut domain);
            let early = &rule.early_filters[bi];
            if !early.is_empty() {
                rel.retain(|b| early.iter().all(|f| keep(f, b, &self.geometry)));
            }
            if rel.is_empty() {
                break;
            }
        }
        if !rel.is_empty() {
            for p in &rule.rule.body.static_patterns {
                let mut rows: Vec<Binding> = self
                    .graph
                    .iter()
                    .filter_map(|t| match_fact(p, &TimestampedFact::new(t.clone(), 0), None))
                    .collect();
                rows.sort();
                rows.dedup();
                rel = hash_join(rel, &mut domain, &rows, &p.variables());
            }
        }
        if !rule.late_filters.is_empty() {
            rel.retain(|b| rule.late_filters.iter().all(|f| keep(f, b, &self.geometry)));
        }
        rel.sort();
        rel.dedup();
        if !rule.naf.is_empty() {
            rel.retain(|b| {
                !rule.naf.iter().any(|&nb| {
                    let state = &self.blocks[nb];
                    let mut d: Vec<Variable> = b.iter().map(|(v, _)| v.clone()).collect();
                    let ext = join_block(state, vec![b.clone()], &mut d);
                    ext.iter().any(|e| state.block.filters.iter().all(|f| keep(f, e, &self.geometry)))
                })
            });
        }
        self.diagnostics.filter_errors += filter_errors;
        self.diagnostics.builtin_errors += builtin_errors;
        rel
    }
}

fn join_block(state: &BlockState, mut rel: Vec<Binding>, domain: &mut Vec<Variable>) -> Vec<Binding> {
    let block = &state.block;
    for i in join_order(&block.patterns) {
        let vars = row_vars(&block.patterns[i], block.timestamp.as_ref());
        rel = hash_join(rel, domain, state.rows(i), &vars);
        if rel.is_empty() {
            break;
        }
    }
    rel
}

fn ground(t: &PatternTerm, b: &Binding, fresh: &mut BTreeMap<String, Term>, counter: &mut u64) -> Option<Term> {
    match t {
        PatternTerm::Var(v) => b.get(v).cloned(),
        PatternTerm::Const(Term::BlankNode(label)) => Some(
            fresh
                .entry(label.to_string())
                .or_insert_with(|| {
                    *counter += 1;
                    Term::blank(format!("{label}_{counter}"))
                })
                .clone(),
        ),
        PatternTerm::Const(c) => Some(c.clone()),
        PatternTerm::Quoted(q) => {
            let (s, p, o) = ground_quoted(q, b, fresh, counter)?;
            Some(Term::Quoted(std::sync::Arc::new(Triple::new(s, p, o))))
        }
    }
}

fn ground_quoted(
    q: &QuotedPattern,
    b: &Binding,
    fresh: &mut BTreeMap<String, Term>,
    counter: &mut u64,
) -> Option<(Term, Iri, Term)> {
    let s = ground(&q.subject, b, fresh, counter)?;
    let p = ground(&q.predicate, b, fresh, counter)?.as_iri()?.clone();
    let o = ground(&q.object, b, fresh, counter)?;
    Some((s, p, o))
}

fn instantiate_head(
    p: &TriplePattern,
    b: &Binding,
    t: Tick,
    fresh: &mut BTreeMap<String, Term>,
    counter: &mut u64,
) -> Option<TimestampedFact> {
    let ts = match p.timestamp_var() {
        Some(v) => {
            let n = b.get(v)?.as_literal()?.as_integer()?;
            Tick::try_from(n).ok()?
        }
        None => t,
    };
    let (s, pr, o) = match p {
        TriplePattern::Triple {
            subject,
            predicate,
            object,
            ..
        } => (
            ground(subject, b, fresh, counter)?,
            ground(predicate, b, fresh, counter)?.as_iri()?.clone(),
            ground(object, b, fresh, counter)?,
        ),
        TriplePattern::Mention { quoted, .. } => ground_quoted(quoted, b, fresh, counter)?,
    };
    Some(TimestampedFact::from_parts(s, pr, o, ts))
}

fn substitute_pattern(p: &PatternTerm, b: &Binding) -> PatternTerm {
    match p {
        PatternTerm::Var(v) => b.get(v).map_or_else(|| p.clone(), |t| PatternTerm::Const(t.clone())),
        PatternTerm::Const(_) => p.clone(),
        PatternTerm::Quoted(q) => PatternTerm::Quoted(Box::new(QuotedPattern {
            subject: substitute_pattern(&q.subject, b),
            predicate: substitute_pattern(&q.predicate, b),
            object: substitute_pattern(&q.object, b),
        })),
    }
}

fn evidence_lines(rule: &Rule, b: &Binding, prefixes: &PrefixMap) -> Vec<String> {
    let mut out = Vec::new();
    for block in &rule.body.positive {
        for p in &block.patterns {
            let ts = p.timestamp_var().or(block.timestamp.as_ref()).and_then(|v| b.get(v));
            let grounded = match p {
                TriplePattern::Triple {
                    subject,
                    predicate,
                    object,
                    ..
                } => TriplePattern::triple(
                    substitute_pattern(subject, b),
                    substitute_pattern(predicate, b),
                    substitute_pattern(object, b),
                ),
                TriplePattern::Mention { quoted, .. } => TriplePattern::Mention {
                    quoted: QuotedPattern {
                        subject: substitute_pattern(&quoted.subject, b),
                        predicate: substitute_pattern(&quoted.predicate, b),
                        object: substitute_pattern(&quoted.object, b),
                    },
                    timestamp: None,
                },
            };
            let mut line = print_pattern(&grounded, prefixes);
            if let Some(ts) = ts {
                line.push_str(&format!(" @{ts}"));
            }
            out.push(line);
        }
    }
    out
}

fn substitute_expr(e: &FilterExpr, b: &Binding) -> FilterExpr {
    match e {
        FilterExpr::Var(v) => b.get(v).map_or_else(|| e.clone(), |t| FilterExpr::Const(t.clone())),
        FilterExpr::Const(_) => e.clone(),
        FilterExpr::Call(f, args) => FilterExpr::Call(*f, args.iter().map(|a| substitute_expr(a, b)).collect()),
        FilterExpr::Binary(op, l, r) => FilterExpr::binary(*op, substitute_expr(l, b), substitute_expr(r, b)),
    }
}

fn filter_trace(rule: &Rule, b: &Binding, geo: &Geometry, prefixes: &PrefixMap) -> Vec<String> {
    rule.body
        .positive_filters()
        .flat_map(|f| f.conjuncts())
        .map(|c| {
            let text = print_expr(&substitute_expr(c, b), prefixes);
            match c {
                FilterExpr::Binary(op, l, _) if op.is_comparison() && !matches!(**l, FilterExpr::Const(_)) => {
                    match eval(l, b, geo).ok().and_then(|v| v.as_num()) {
                        Some(x) => format!("{text} [{x}]"),
                        None => text,
                    }
                }
                _ => text,
            }
        })
        .collect()
}
