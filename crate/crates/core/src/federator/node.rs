use std::collections::{BTreeMap, HashMap};
use std::sync::mpsc::{self, Receiver, Sender};
use std::thread::JoinHandle;
use std::time::Duration;

use super::plan::{Endpoint, NodeDescriptor, NodeId, QueryPlan, Registry};
use super::protocol::{Frame, SubId};
use super::transport::{tcp_connect, InProcNetwork, Link, RetryPolicy, TcpAcceptor, TransportError};
use super::FederationError;
use crate::fusion::{FusionResolver, RuleWeights};
use crate::ql::{pretty_print, PatternTerm, Rule, RuleParser, TriplePattern};
use crate::rdf::{Iri, StreamId, Term, Tick, TimestampedFact, Triple};
use crate::runtime::{AcceptAll, Emitted, Engine, RuntimeConfig};

/// Everything a node thread reacts to.
pub enum Event {
    /// A peer opened a link; frames to it go through `link`.
    Connected { peer: NodeId, link: Box<dyn Link> },
    Line { peer: NodeId, line: String },
    Disconnected { peer: NodeId },
    /// The clock: facts of this node's streams stamped `tick`.
    Tick { tick: Tick, facts: Vec<(StreamId, TimestampedFact)> },
    Install {
        plans: Vec<QueryPlan>,
        setup: RootSetup,
        reply: Sender<Result<Vec<Subscription>, FederationError>>,
    },
    Unsubscribe {
        id: SubId,
        reply: Sender<Result<(), FederationError>>,
    },
    Stats { reply: Sender<NodeStats> },
    Shutdown,
}

/// Root-side evaluation settings.
#[derive(Clone, Debug, Default)]
pub struct RootSetup {
    pub runtime: RuntimeConfig,
    /// Soft candidates go through world selection with these weights;
    /// `None` accepts them all.
    pub weights: Option<RuleWeights>,
    pub static_graph: Vec<Triple>,
}

/// An installed subquery, seen from the subscriber.
#[derive(Clone, Debug, PartialEq)]
pub struct Subscription {
    pub id: SubId,
    pub target: NodeId,
    pub sink: StreamId,
    pub subquery: String,
}

/// Root output for one tick.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeOutput {
    pub node: NodeId,
    pub tick: Tick,
    pub emitted: Vec<Emitted>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NodeStats {
    /// Subqueries this node evaluates for peers.
    pub served: usize,
    pub facts_sent: u64,
    pub facts_received: u64,
    /// Delivery violations: count mismatches, facts after unsubscribe.
    pub audit: Vec<String>,
    /// Facts received per subscription.
    pub received_by_sub: BTreeMap<SubId, u64>,
}

struct Served {
    engine: Engine,
    stream: StreamId,
}

#[derive(Debug)]
struct SubState {
    target: NodeId,
    sink: StreamId,
    acked: bool,
    closing: bool,
    closed: bool,
    done_through: Option<Tick>,
    counts: BTreeMap<Tick, u64>,
}

struct Root {
    engine: Engine,
    weights: Option<RuleWeights>,
    pending_ticks: BTreeMap<Tick, Vec<(StreamId, TimestampedFact)>>,
    inbound: BTreeMap<Tick, Vec<(StreamId, TimestampedFact)>>,
}

struct PendingInstall {
    waiting: Vec<SubId>,
    subs: Vec<Subscription>,
    reply: Sender<Result<Vec<Subscription>, FederationError>>,
}

/// How a node reaches its peers.
#[derive(Clone)]
pub struct Connector {
    pub network: InProcNetwork,
    pub retry: RetryPolicy,
}

struct Node {
    desc: NodeDescriptor,
    registry: Registry,
    connector: Connector,
    inbox: Sender<Event>,
    outputs: Sender<NodeOutput>,
    peers: HashMap<NodeId, Box<dyn Link>>,
    advertised: BTreeMap<NodeId, BTreeMap<StreamId, Vec<Iri>>>,
    served: BTreeMap<(NodeId, SubId), Served>,
    subs: BTreeMap<SubId, SubState>,
    next_sub: SubId,
    root: Option<Root>,
    installing: Option<PendingInstall>,
    unsubscribing: BTreeMap<SubId, Sender<Result<(), FederationError>>>,
    stats: NodeStats,
}

impl Node {
    fn run(mut self, rx: Receiver<Event>) {
        while let Ok(ev) = rx.recv() {
            match ev {
                Event::Shutdown => break,
                Event::Connected { peer, mut link } => {
                    let mut hello = vec![Frame::Hello {
                        node: self.desc.id.clone(),
                    }];
                    hello.extend(self.desc.streams.iter().map(|(s, p)| Frame::Advertise {
                        stream: s.clone(),
                        predicates: p.iter().cloned().collect(),
                    }));
                    for f in &hello {
                        if let Err(e) = link.send(f) {
                            log::warn!("{}: greeting {peer} failed: {e}", self.desc.id);
                        }
                    }
                    self.peers.insert(peer, link);
                }
                Event::Line { peer, line } => match Frame::decode(&line) {
                    Ok(frame) => self.on_frame(&peer, frame),
                    Err(e) => log::warn!("{}: from {peer}: {e}", self.desc.id),
                },
                Event::Disconnected { peer } => {
                    self.peers.remove(&peer);
                    self.served.retain(|(p, _), _| *p != peer);
                }
                Event::Tick { tick, facts } => self.on_tick(tick, facts),
                Event::Install { plans, setup, reply } => self.install(plans, setup, reply),
                Event::Unsubscribe { id, reply } => self.unsubscribe(id, reply),
                Event::Stats { reply } => {
                    let mut s = self.stats.clone();
                    s.served = self.served.len();
                    let _ = reply.send(s);
                }
            }
        }
    }

    fn send(&mut self, peer: &str, frame: Frame) {
        match self.peers.get_mut(peer) {
            Some(link) => {
                if let Err(e) = link.send(&frame) {
                    log::warn!("{}: send to {peer} failed: {e}", self.desc.id);
                }
            }
            None => log::warn!("{}: no link to {peer}", self.desc.id),
        }
    }

    fn link_to(&mut self, peer: &str) -> Result<(), TransportError> {
        if self.peers.contains_key(peer) {
            return Ok(());
        }
        let desc = self.registry.node(peer).ok_or_else(|| TransportError::Unreachable {
            node: peer.to_string(),
            endpoint: "?".into(),
            attempts: 0,
            last: "not in the registry".into(),
        })?;
        let link = match &desc.endpoint {
            Endpoint::InProc => self.connector.network.connect(&self.desc.id, peer)?,
            Endpoint::Tcp(addr) | Endpoint::Remote(addr) => tcp_connect(&self.desc.id, peer, addr, self.inbox.clone(), self.connector.retry)?,
        };
        self.peers.insert(peer.to_string(), link);
        Ok(())
    }

    fn on_frame(&mut self, peer: &str, frame: Frame) {
        match frame {
            Frame::Hello { .. } => {}
            Frame::Advertise { stream, predicates } => {
                self.advertised.entry(peer.to_string()).or_default().insert(stream, predicates);
            }
            Frame::Sub { id, rule } => {
                let reply = match self.serve(peer, id, &rule) {
                    Ok(()) => Frame::Ack { id },
                    Err(reason) => Frame::Err { id, reason },
                };
                self.send(peer, reply);
            }
            Frame::Unsub { id } => {
                self.served.remove(&(peer.to_string(), id));
                self.send(peer, Frame::Ack { id });
            }
            Frame::Ack { id } => self.on_ack(id),
            Frame::Err { id, reason } => self.on_err(peer, id, reason),
            Frame::Fact { id, tick, fact } => {
                self.stats.facts_received += 1;
                *self.stats.received_by_sub.entry(id).or_insert(0) += 1;
                let Some(sub) = self.subs.get_mut(&id) else {
                    self.stats.audit.push(format!("fact for unknown subscription {id}"));
                    return;
                };
                if sub.closed {
                    self.stats.audit.push(format!("fact on subscription {id} after unsubscribe"));
                    return;
                }
                *sub.counts.entry(tick).or_insert(0) += 1;
                if let Some(root) = &mut self.root {
                    root.inbound.entry(tick).or_default().push((sub.sink.clone(), fact));
                }
            }
            Frame::Done { id, tick, count } => {
                let Some(sub) = self.subs.get_mut(&id) else { return };
                let got = sub.counts.remove(&tick).unwrap_or(0);
                if got != count {
                    self.stats
                        .audit
                        .push(format!("subscription {id} tick {tick}: received {got} of {count} facts"));
                }
                sub.done_through = Some(tick);
                self.try_evaluate();
            }
        }
    }

    /// Installs a subquery for `peer`.
    fn serve(&mut self, peer: &str, id: SubId, text: &str) -> Result<(), String> {
        let mut rules = RuleParser::new().parse(text).map_err(|e| format!("rejected subquery: {e}"))?;
        let [rule] = rules.as_mut_slice() else {
            return Err(format!("expected one rule, got {}", rules.len()));
        };
        if rule.body.positive.len() != 1 || !rule.body.naf.is_empty() {
            return Err("a subquery must read exactly one stream block".into());
        }
        let stream = rule.body.positive[0].stream.clone();
        if !self.desc.streams.contains_key(&stream) {
            return Err(format!("stream {stream} is not owned by {}", self.desc.id));
        }
        // Row labels carry the subscription id so that rows of duplicate
        // subscriptions never merge at the subscriber.
        for p in &mut rule.head {
            relabel_blank(p, id);
        }
        let mut engine = Engine::new(RuntimeConfig {
            feedback: false,
            ..RuntimeConfig::default()
        });
        engine.register_stream(stream.clone()).map_err(|e| e.to_string())?;
        engine.load_rules(vec![rule.clone()]).map_err(|e| e.to_string())?;
        self.served.insert((peer.to_string(), id), Served { engine, stream });
        Ok(())
    }

    fn on_tick(&mut self, tick: Tick, facts: Vec<(StreamId, TimestampedFact)>) {
        let keys: Vec<(NodeId, SubId)> = self.served.keys().cloned().collect();
        for key in keys {
            let served = self.served.get_mut(&key).expect("key from map");
            let own: Vec<TimestampedFact> = facts
                .iter()
                .filter(|(s, _)| *s == served.stream)
                .map(|(_, f)| f.clone())
                .collect();
            let result = served
                .engine
                .push(&served.stream, own)
                .and_then(|_| served.engine.evaluate_tick(tick));
            let rows = match result {
                Ok(out) => out,
                Err(e) => {
                    log::warn!("{}: subquery {} failed at tick {tick}: {e}", self.desc.id, key.1);
                    Vec::new()
                }
            };
            let count = rows.len() as u64;
            let (peer, id) = key;
            for e in rows {
                self.stats.facts_sent += 1;
                self.send(&peer, Frame::Fact { id, tick, fact: e.fact });
            }
            self.send(&peer, Frame::Done { id, tick, count });
        }
        if let Some(root) = &mut self.root {
            root.pending_ticks.entry(tick).or_default().extend(facts);
            self.try_evaluate();
        }
    }

    /// Evaluates root ticks whose subscriptions have all reported.
    fn try_evaluate(&mut self) {
        loop {
            let Some(root) = &mut self.root else { return };
            let Some((&tick, _)) = root.pending_ticks.iter().next() else { return };
            let ready = self
                .subs
                .values()
                .filter(|s| s.acked && !s.closed)
                .all(|s| s.done_through.is_some_and(|d| d >= tick));
            if !ready {
                return;
            }
            let local = root.pending_ticks.remove(&tick).unwrap_or_default();
            let mut remote = Vec::new();
            while let Some(entry) = root.inbound.first_entry() {
                if *entry.key() > tick {
                    break;
                }
                remote.extend(entry.remove());
            }
            let mut by_stream: BTreeMap<StreamId, Vec<TimestampedFact>> = BTreeMap::new();
            for (s, f) in local.into_iter().chain(remote) {
                by_stream.entry(s).or_default().push(f);
            }
            for (s, mut fs) in by_stream {
                fs.sort_by_key(TimestampedFact::timestamp);
                if root.engine.is_registered(&s) {
                    if let Err(e) = root.engine.push(&s, fs) {
                        log::warn!("{}: {e}", self.desc.id);
                    }
                }
            }
            let result = match &root.weights {
                Some(w) => root.engine.evaluate_tick_with(tick, &mut FusionResolver::new(w.clone())),
                None => root.engine.evaluate_tick_with(tick, &mut AcceptAll),
            };
            let emitted = result.unwrap_or_else(|e| {
                log::warn!("{}: tick {tick}: {e}", self.desc.id);
                Vec::new()
            });
            let _ = self.outputs.send(NodeOutput {
                node: self.desc.id.clone(),
                tick,
                emitted,
            });
        }
    }

    fn install(
        &mut self,
        plans: Vec<QueryPlan>,
        setup: RootSetup,
        reply: Sender<Result<Vec<Subscription>, FederationError>>,
    ) {
        let mut engine = Engine::new(setup.runtime.clone());
        for t in setup.static_graph {
            engine.static_graph_mut().insert(t);
        }
        let mut register = |s: &StreamId| -> Result<(), FederationError> {
            if !engine.is_registered(s) {
                engine.register_stream(s.clone())?;
            }
            Ok(())
        };
        let mut result: Result<(), FederationError> = Ok(());
        for s in self.desc.streams.keys().chain(plans.iter().flat_map(|p| p.sinks())) {
            result = result.and_then(|_| register(s));
        }
        let rules: Vec<Rule> = plans.iter().map(|p| p.rule.clone()).collect();
        if let Err(e) = result.and_then(|_| engine.load_rules(rules).map_err(FederationError::from)) {
            let _ = reply.send(Err(e));
            return;
        }
        self.root = Some(Root {
            engine,
            weights: setup.weights,
            pending_ticks: BTreeMap::new(),
            inbound: BTreeMap::new(),
        });
        let mut subs = Vec::new();
        for frag in plans.iter().flat_map(|p| &p.fragments) {
            if let Err(e) = self.link_to(&frag.target) {
                let _ = reply.send(Err(e.into()));
                return;
            }
            self.next_sub += 1;
            let id = self.next_sub;
            let text = pretty_print(&frag.rule);
            self.subs.insert(
                id,
                SubState {
                    target: frag.target.clone(),
                    sink: frag.sink.clone(),
                    acked: false,
                    closing: false,
                    closed: false,
                    done_through: None,
                    counts: BTreeMap::new(),
                },
            );
            subs.push(Subscription {
                id,
                target: frag.target.clone(),
                sink: frag.sink.clone(),
                subquery: text.clone(),
            });
            self.send(&frag.target.clone(), Frame::Sub { id, rule: text });
        }
        if subs.is_empty() {
            let _ = reply.send(Ok(subs));
            return;
        }
        self.installing = Some(PendingInstall {
            waiting: subs.iter().map(|s| s.id).collect(),
            subs,
            reply,
        });
    }

    fn unsubscribe(&mut self, id: SubId, reply: Sender<Result<(), FederationError>>) {
        let Some(sub) = self.subs.get_mut(&id).filter(|s| !s.closed) else {
            let _ = reply.send(Err(FederationError::UnknownSubscription(id)));
            return;
        };
        sub.closing = true;
        let target = sub.target.clone();
        self.unsubscribing.insert(id, reply);
        self.send(&target, Frame::Unsub { id });
    }

    fn on_ack(&mut self, id: SubId) {
        let Some(sub) = self.subs.get_mut(&id) else { return };
        if sub.closing {
            sub.closed = true;
            if let Some(r) = self.unsubscribing.remove(&id) {
                let _ = r.send(Ok(()));
            }
            self.try_evaluate();
            return;
        }
        sub.acked = true;
        if let Some(p) = &mut self.installing {
            p.waiting.retain(|&w| w != id);
            if p.waiting.is_empty() {
                let p = self.installing.take().expect("checked above");
                let _ = p.reply.send(Ok(p.subs));
            }
        }
    }

    fn on_err(&mut self, peer: &str, id: SubId, reason: String) {
        if self.installing.as_ref().is_some_and(|p| p.waiting.contains(&id)) {
            let p = self.installing.take().expect("checked above");
            let _ = p.reply.send(Err(FederationError::Rejected {
                node: peer.to_string(),
                id,
                reason,
            }));
        } else {
            log::warn!("{}: {peer} reported on subscription {id}: {reason}", self.desc.id);
            self.stats.audit.push(format!("error on subscription {id}: {reason}"));
        }
    }
}

fn relabel_blank(p: &mut TriplePattern, id: SubId) {
    fn fix(t: &mut PatternTerm, id: SubId) {
        match t {
            PatternTerm::Const(Term::BlankNode(label)) => *t = PatternTerm::Const(Term::blank(format!("{label}_s{id}"))),
            PatternTerm::Quoted(q) => {
                fix(&mut q.subject, id);
                fix(&mut q.object, id);
            }
            _ => {}
        }
    }
    match p {
        TriplePattern::Triple { subject, object, .. } => {
            fix(subject, id);
            fix(object, id);
        }
        TriplePattern::Mention { quoted, .. } => {
            fix(&mut quoted.subject, id);
            fix(&mut quoted.object, id);
        }
    }
}

/// A running node.
pub struct NodeHandle {
    pub id: NodeId,
    inbox: Sender<Event>,
    thread: Option<JoinHandle<()>>,
    _acceptor: Option<TcpAcceptor>,
}

/// A node whose inbox exists (and whose socket is bound) but whose thread
/// has not started, so that every address is known before anyone dials.
pub struct PreparedNode {
    pub desc: NodeDescriptor,
    inbox: Sender<Event>,
    rx: Receiver<Event>,
    acceptor: Option<TcpAcceptor>,
}

impl PreparedNode {
    /// Creates the inbox, joins the in-process network and binds the TCP
    /// endpoint. A TCP descriptor's address is replaced by the bound one.
    pub fn prepare(mut desc: NodeDescriptor, network: &InProcNetwork) -> Result<Self, FederationError> {
        let (inbox, rx) = mpsc::channel();
        let acceptor = match &desc.endpoint {
            Endpoint::InProc => {
                network.register(&desc.id, inbox.clone());
                None
            }
            Endpoint::Remote(addr) => {
                return Err(FederationError::Bind {
                    node: desc.id.clone(),
                    endpoint: addr.clone(),
                    reason: "the node runs in another process".into(),
                })
            }
            Endpoint::Tcp(addr) => {
                let a = TcpAcceptor::bind(addr, inbox.clone()).map_err(|e| FederationError::Bind {
                    node: desc.id.clone(),
                    endpoint: addr.clone(),
                    reason: e.to_string(),
                })?;
                desc.endpoint = Endpoint::Tcp(a.addr.to_string());
                Some(a)
            }
        };
        Ok(PreparedNode {
            desc,
            inbox,
            rx,
            acceptor,
        })
    }

    pub fn start(self, registry: Registry, connector: Connector, outputs: Sender<NodeOutput>) -> NodeHandle {
        let node = Node {
            desc: self.desc.clone(),
            registry,
            connector,
            inbox: self.inbox.clone(),
            outputs,
            peers: HashMap::new(),
            advertised: BTreeMap::new(),
            served: BTreeMap::new(),
            subs: BTreeMap::new(),
            next_sub: 0,
            root: None,
            installing: None,
            unsubscribing: BTreeMap::new(),
            stats: NodeStats::default(),
        };
        let rx = self.rx;
        let thread = std::thread::Builder::new()
            .name(format!("node-{}", self.desc.id))
            .spawn(move || node.run(rx))
            .expect("spawn node thread");
        NodeHandle {
            id: self.desc.id,
            inbox: self.inbox,
            thread: Some(thread),
            _acceptor: self.acceptor,
        }
    }
}

/// How long a caller waits for a node to answer a request.
pub const REQUEST_TIMEOUT: Duration = Duration::from_secs(10);

impl NodeHandle {
    fn post(&self, ev: Event) -> Result<(), FederationError> {
        self.inbox.send(ev).map_err(|_| FederationError::NodeStopped(self.id.clone()))
    }

    fn await_reply<T>(&self, rx: Receiver<T>) -> Result<T, FederationError> {
        rx.recv_timeout(REQUEST_TIMEOUT)
            .map_err(|_| FederationError::Timeout(format!("node {} did not answer", self.id)))
    }

    pub fn tick(&self, tick: Tick, facts: Vec<(StreamId, TimestampedFact)>) -> Result<(), FederationError> {
        self.post(Event::Tick { tick, facts })
    }

    /// Installs root rules and subscribes their fragments; returns once
    /// every target acknowledged.
    pub fn install(&self, plans: Vec<QueryPlan>, setup: RootSetup) -> Result<Vec<Subscription>, FederationError> {
        let (reply, rx) = mpsc::channel();
        self.post(Event::Install { plans, setup, reply })?;
        self.await_reply(rx)?
    }

    /// Cancels a subscription; no facts for it arrive after this returns.
    pub fn unsubscribe(&self, id: SubId) -> Result<(), FederationError> {
        let (reply, rx) = mpsc::channel();
        self.post(Event::Unsubscribe { id, reply })?;
        self.await_reply(rx)?
    }

    pub fn stats(&self) -> Result<NodeStats, FederationError> {
        let (reply, rx) = mpsc::channel();
        self.post(Event::Stats { reply })?;
        self.await_reply(rx)
    }
}

impl Drop for NodeHandle {
    fn drop(&mut self) {
        let _ = self.inbox.send(Event::Shutdown);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}
