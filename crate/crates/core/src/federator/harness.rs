use std::collections::{BTreeMap, BTreeSet};
use std::sync::mpsc::{self, Receiver};

use super::node::{Connector, NodeHandle, NodeOutput, NodeStats, PreparedNode, RootSetup, Subscription, REQUEST_TIMEOUT};
use super::plan::{Endpoint, NodeDescriptor, NodeId, QueryPlan, Registry, Rewriter};
use super::protocol::SubId;
use super::transport::{InProcNetwork, RetryPolicy};
use super::FederationError;
use crate::fusion::FusionResolver;
use crate::ql::Rule;
use crate::rdf::{FactParser, Iri, PrefixMap, StreamId, Tick, TimestampedFact};
use crate::runtime::{AcceptAll, Engine};

/// Nodes, their endpoints and streams, and the node rules are submitted to.
#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    pub root: NodeId,
    pub nodes: Vec<NodeDescriptor>,
}

/// Reads a topology file:
///
/// ```text
/// node <id> inproc | <host:port> | remote <host:port>
/// stream <node> <stream> [<predicate> ...]
/// root <id>                      # default: the first node
/// ```
pub fn parse_topology(text: &str, prefixes: &PrefixMap) -> Result<Topology, FederationError> {
    let mut nodes: Vec<NodeDescriptor> = Vec::new();
    let mut root = None;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let bad = |m: String| FederationError::Topology { line, message: m };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let words: Vec<&str> = content.split_whitespace().collect();
        match words.as_slice() {
            ["node", id, endpoint @ ..] => {
                if nodes.iter().any(|d| d.id == *id) {
                    return Err(bad(format!("duplicate node {id}")));
                }
                let ep = match endpoint {
                    ["inproc"] => Endpoint::InProc,
                    ["remote", addr] => Endpoint::Remote(addr.to_string()),
                    [addr] if *addr != "remote" => Endpoint::Tcp(addr.to_string()),
                    _ => return Err(bad(format!("bad endpoint for node {id}"))),
                };
                nodes.push(NodeDescriptor::new(*id, ep));
            }
            ["stream", id, stream, preds @ ..] => {
                let iri = |w: &str| resolve_iri(w, prefixes).ok_or_else(|| bad(format!("bad IRI {w}")));
                let stream = StreamId(iri(stream)?);
                let preds = preds.iter().map(|p| iri(p)).collect::<Result<BTreeSet<Iri>, _>>()?;
                let node = nodes
                    .iter_mut()
                    .find(|d| d.id == *id)
                    .ok_or_else(|| bad(format!("stream for undeclared node {id}")))?;
                node.streams.insert(stream, preds);
            }
            ["root", id] => root = Some(id.to_string()),
            _ => return Err(bad(format!("unrecognized line {content:?}"))),
        }
    }
    let root = match root {
        Some(r) if nodes.iter().any(|d| d.id == r) => r,
        Some(r) => return Err(FederationError::UnknownNode(r)),
        None => nodes
            .first()
            .map(|d| d.id.clone())
            .ok_or(FederationError::Topology {
                line: 0,
                message: "no nodes".into(),
            })?,
    };
    Registry::new(nodes.clone())?;
    Ok(Topology { root, nodes })
}

/// `<iri>`, `<:local>` or `prefix:local`.
fn resolve_iri(word: &str, prefixes: &PrefixMap) -> Option<Iri> {
    let inner = match word.strip_prefix('<').and_then(|w| w.strip_suffix('>')) {
        Some(i) => i,
        None => word,
    };
    if let Some((p, local)) = inner.split_once(':') {
        if let Some(ns) = prefixes.get(p) {
            if !local.starts_with("//") {
                return Some(Iri::new(format!("{ns}{local}")));
            }
        }
    }
    inner.contains(':').then(|| Iri::new(inner))
}

/// Scripted input: facts per tick and stream.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub ticks: BTreeMap<Tick, Vec<(StreamId, TimestampedFact)>>,
}

impl Trace {
    pub fn push(&mut self, stream: StreamId, fact: TimestampedFact) {
        self.ticks.entry(fact.timestamp()).or_default().push((stream, fact));
    }

    /// Every tick from the first to the last one with facts.
    pub fn span(&self) -> Vec<Tick> {
        match (self.ticks.keys().next(), self.ticks.keys().last()) {
            (Some(&a), Some(&b)) => (a..=b).collect(),
            _ => Vec::new(),
        }
    }

    pub fn at(&self, tick: Tick) -> Vec<(StreamId, TimestampedFact)> {
        self.ticks.get(&tick).cloned().unwrap_or_default()
    }

    pub fn streams(&self) -> BTreeSet<StreamId> {
        self.ticks.values().flatten().map(|(s, _)| s.clone()).collect()
    }
}

/// Reads a trace file: `tick<TAB>stream<TAB>statements` lines (plus `#`
/// comments); facts take the line's tick.
pub fn parse_trace(text: &str, prefixes: &PrefixMap) -> Result<Trace, FederationError> {
    let mut trace = Trace::default();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let bad = |m: String| FederationError::Trace { line, message: m };
        if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
            continue;
        }
        let mut parts = raw.splitn(3, '\t');
        let (Some(tick), Some(stream), Some(body)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(bad("expected tick<TAB>stream<TAB>statements".into()));
        };
        let tick: Tick = tick.trim().parse().map_err(|_| bad(format!("bad tick {tick:?}")))?;
        let stream = StreamId(resolve_iri(stream.trim(), prefixes).ok_or_else(|| bad(format!("bad stream {stream:?}")))?);
        let facts = FactParser::new()
            .with_prefixes(prefixes.clone())
            .with_default_timestamp(tick)
            .parse(body)
            .map_err(|e| bad(e.to_string()))?;
        for f in facts {
            trace.push(stream.clone(), f.at(tick));
        }
    }
    Ok(trace)
}

/// Rule output of one tick, sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TickOutput {
    pub tick: Tick,
    pub facts: Vec<TimestampedFact>,
}

fn tick_output(tick: Tick, emitted: Vec<crate::runtime::Emitted>) -> TickOutput {
    let mut facts: Vec<TimestampedFact> = emitted.into_iter().map(|e| e.fact).collect();
    facts.sort();
    TickOutput { tick, facts }
}

/// Evaluates `rules` on one engine that sees every stream.
pub fn run_monolithic(rules: &[Rule], trace: &Trace, setup: &RootSetup) -> Result<Vec<TickOutput>, FederationError> {
    let mut engine = Engine::new(setup.runtime.clone());
    for t in &setup.static_graph {
        engine.static_graph_mut().insert(t.clone());
    }
    let mut streams = trace.streams();
    for r in rules {
        streams.extend(r.body.positive.iter().chain(&r.body.naf).map(|b| b.stream.clone()));
    }
    for s in streams {
        engine.register_stream(s)?;
    }
    engine.load_rules(rules.to_vec())?;
    let mut out = Vec::new();
    for t in trace.span() {
        let mut by_stream: BTreeMap<StreamId, Vec<TimestampedFact>> = BTreeMap::new();
        for (s, f) in trace.at(t) {
            by_stream.entry(s).or_default().push(f);
        }
        for (s, fs) in by_stream {
            engine.push(&s, fs)?;
        }
        let emitted = match &setup.weights {
            Some(w) => engine.evaluate_tick_with(t, &mut FusionResolver::new(w.clone()))?,
            None => engine.evaluate_tick_with(t, &mut AcceptAll)?,
        };
        out.push(tick_output(t, emitted));
    }
    Ok(out)
}

/// A running federation driven by one scripted clock.
pub struct Federation {
    root: NodeId,
    registry: Registry,
    handles: Vec<NodeHandle>,
    outputs: Receiver<NodeOutput>,
    rewriter: Rewriter,
    installed: bool,
}

impl Federation {
    /// Starts every node of the topology except remote ones. TCP endpoints
    /// are bound before any node dials, so port 0 works.
    pub fn start(topology: &Topology, retry: RetryPolicy) -> Result<Self, FederationError> {
        let network = InProcNetwork::new();
        let prepared = topology
            .nodes
            .iter()
            .filter(|d| !matches!(d.endpoint, Endpoint::Remote(_)))
            .map(|d| PreparedNode::prepare(d.clone(), &network))
            .collect::<Result<Vec<_>, _>>()?;
        let remote = topology.nodes.iter().filter(|d| matches!(d.endpoint, Endpoint::Remote(_)));
        let registry = Registry::new(prepared.iter().map(|p| p.desc.clone()).chain(remote.cloned()).collect())?;
        if registry.node(&topology.root).is_some_and(|d| matches!(d.endpoint, Endpoint::Remote(_))) {
            return Err(FederationError::Bind {
                node: topology.root.clone(),
                endpoint: "remote".into(),
                reason: "the root must run here".into(),
            });
        }
        let (tx, outputs) = mpsc::channel();
        let connector = Connector { network, retry };
        let handles = prepared
            .into_iter()
            .map(|p| p.start(registry.clone(), connector.clone(), tx.clone()))
            .collect();
        Ok(Federation {
            root: topology.root.clone(),
            registry,
            handles,
            outputs,
            rewriter: Rewriter::new(),
            installed: false,
        })
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn node(&self, id: &str) -> Option<&NodeHandle> {
        self.handles.iter().find(|h| h.id == id)
    }

    fn root_handle(&self) -> Result<&NodeHandle, FederationError> {
        self.node(&self.root).ok_or_else(|| FederationError::UnknownNode(self.root.clone()))
    }

    /// Plans every rule at the root and subscribes the fragments.
    pub fn install(&mut self, rules: &[Rule], setup: RootSetup) -> Result<(Vec<QueryPlan>, Vec<Subscription>), FederationError> {
        let plans = rules
            .iter()
            .map(|r| self.rewriter.rewrite(r, &self.registry, &self.root))
            .collect::<Result<Vec<_>, _>>()?;
        let subs = self.root_handle()?.install(plans.clone(), setup)?;
        self.installed = true;
        Ok((plans, subs))
    }

    /// Subscribes an already planned set again, with fresh ids.
    pub fn resubscribe(&mut self, plans: Vec<QueryPlan>, setup: RootSetup) -> Result<Vec<Subscription>, FederationError> {
        self.root_handle()?.install(plans, setup)
    }

    pub fn unsubscribe(&self, id: SubId) -> Result<(), FederationError> {
        self.root_handle()?.unsubscribe(id)
    }

    /// Delivers the facts of `tick` to the nodes owning their streams and
    /// waits for the root's output.
    pub fn tick(&self, tick: Tick, facts: Vec<(StreamId, TimestampedFact)>) -> Result<TickOutput, FederationError> {
        let mut per_node: BTreeMap<NodeId, Vec<(StreamId, TimestampedFact)>> = BTreeMap::new();
        for (s, f) in facts {
            match self.registry.owner(&s)? {
                Some(n) if self.node(&n.id).is_some() => per_node.entry(n.id.clone()).or_default().push((s, f)),
                Some(n) => log::warn!("{s} is fed by remote node {}; dropping a fact at tick {tick}", n.id),
                None => log::warn!("no node owns {s}; dropping a fact at tick {tick}"),
            }
        }
        for h in &self.handles {
            h.tick(tick, per_node.remove(&h.id).unwrap_or_default())?;
        }
        if !self.installed {
            return Ok(TickOutput { tick, facts: Vec::new() });
        }
        loop {
            let out = self
                .outputs
                .recv_timeout(REQUEST_TIMEOUT)
                .map_err(|_| FederationError::Timeout(format!("no root output for tick {tick}")))?;
            if out.tick == tick {
                return Ok(tick_output(tick, out.emitted));
            }
        }
    }

    pub fn run(&self, trace: &Trace) -> Result<Vec<TickOutput>, FederationError> {
        trace.span().into_iter().map(|t| self.tick(t, trace.at(t))).collect()
    }

    pub fn stats(&self) -> Result<BTreeMap<NodeId, NodeStats>, FederationError> {
        self.handles.iter().map(|h| Ok((h.id.clone(), h.stats()?))).collect()
    }
}

/// Everything a federated run produced.
#[derive(Clone, Debug)]
pub struct FederatedRun {
    pub plans: Vec<QueryPlan>,
    pub subscriptions: Vec<Subscription>,
    pub outputs: Vec<TickOutput>,
    pub stats: BTreeMap<NodeId, NodeStats>,
}

pub fn run_federated(
    topology: &Topology,
    rules: &[Rule],
    trace: &Trace,
    setup: &RootSetup,
    retry: RetryPolicy,
) -> Result<FederatedRun, FederationError> {
    let mut fed = Federation::start(topology, retry)?;
    let (plans, subscriptions) = fed.install(rules, setup.clone())?;
    let outputs = fed.run(trace)?;
    let stats = fed.stats()?;
    Ok(FederatedRun {
        plans,
        subscriptions,
        outputs,
        stats,
    })
}

/// Outcome of comparing federated with monolithic output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Equal,
    Differ {
        tick: Tick,
        missing: Vec<TimestampedFact>,
        extra: Vec<TimestampedFact>,
    },
}

impl Verdict {
    pub fn is_equal(&self) -> bool {
        matches!(self, Verdict::Equal)
    }
}

/// Per-tick multiset comparison; `reference` is the monolithic output.
pub fn compare(reference: &[TickOutput], federated: &[TickOutput]) -> Verdict {
    let index = |outs: &[TickOutput]| -> BTreeMap<Tick, Vec<TimestampedFact>> {
        outs.iter().map(|o| (o.tick, o.facts.clone())).collect()
    };
    let (a, b) = (index(reference), index(federated));
    let ticks: BTreeSet<Tick> = a.keys().chain(b.keys()).copied().collect();
    for t in ticks {
        let (x, y) = (a.get(&t).cloned().unwrap_or_default(), b.get(&t).cloned().unwrap_or_default());
        if x != y {
            return Verdict::Differ {
                tick: t,
                missing: multiset_minus(&x, &y),
                extra: multiset_minus(&y, &x),
            };
        }
    }
    Verdict::Equal
}

fn multiset_minus(a: &[TimestampedFact], b: &[TimestampedFact]) -> Vec<TimestampedFact> {
    let mut rest = b.to_vec();
    let mut out = Vec::new();
    for f in a {
        match rest.iter().position(|g| g == f) {
            Some(i) => {
                rest.swap_remove(i);
            }
            None => out.push(f.clone()),
        }
    }
    out
}
