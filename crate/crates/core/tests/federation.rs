use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use streamfuse::federator::*;
use streamfuse::ql::{parse_rule_document, pretty_print, Rule, RuleParser};
use streamfuse::rdf::vocab::ns;
use streamfuse::rdf::{parse_fact_document, StreamId, TimestampedFact};
use streamfuse::runtime::{Engine, RuntimeConfig};

#[path = "common/corpus.rs"]
mod corpus;

use corpus::*;

const RULE_2: &str = include_str!("../fixtures/rule_w_2.ttl");
const RULE_3: &str = include_str!("../fixtures/rule_w_3.ttl");

/// The re-identification rule with its first block reading a track-end stream of its own.
fn reid_split() -> Rule {
    let text = RULE_3.replacen("STREAM <:ssr> @?Te", "STREAM <:tracks> @?Te", 1);
    parse_rule_document(&text).unwrap().remove(0)
}

fn trace_of(items: &[(u64, &str, &str)]) -> Trace {
    let mut trace = Trace::default();
    for (tick, s, text) in items {
        for f in parse_fact_document(text).unwrap() {
            trace.push(stream(s), f.at(*tick));
        }
    }
    trace
}

#[test]
fn feedback_off_keeps_derived_facts_out_of_windows() {
    let q = "CONSTRUCT { ?B a :seen } WHERE { STREAM <:ssr> { ?B a :car } }";
    let chained = "CONSTRUCT { ?B a :twice } WHERE { STREAM <:ssr> { ?B a :seen } }";
    let rules = parse_rule_document(&(wrap("ssr:one", q) + &wrap("ssr:two", chained))).unwrap();
    let run = |feedback| {
        let mut e = Engine::new(RuntimeConfig {
            feedback,
            same_tick_fixpoint: true,
            ..RuntimeConfig::default()
        });
        e.register_stream(stream("ssr")).unwrap();
        e.load_rules(rules.clone()).unwrap();
        e.push(&stream("ssr"), parse_fact_document(":b1 a :car.").unwrap()).unwrap();
        e.evaluate_tick(0).unwrap().len()
    };
    assert_eq!(run(true), 2);
    assert_eq!(run(false), 1);
}

#[test]
fn remote_single_block_rule_becomes_one_relay() {
    let rule = parse_rule_document(RULE_2).unwrap().remove(0);
    let registry = Registry::new(vec![node("root", &[]), node("edge", &["ssr"])]).unwrap();
    let plan = Rewriter::new().rewrite(&rule, &registry, "root").unwrap();
    plan.check().unwrap();
    assert_eq!(plan.fragments.len(), 1);
    let frag = &plan.fragments[0];
    assert_eq!(frag.target, "edge");
    assert!(!frag.negated);
    // Both conjuncts, iou included, run where the geometry lives; the
    // soft rule keeps a copy of its evidence so its confidence is unchanged.
    assert_eq!(frag.pushed.len(), 2);
    assert_eq!(plan.rule.body.filters.len(), 1);
    let evidence = &plan.rule.body.filters[0];
    assert!(frag.pushed.contains(evidence));
    assert!(plan.rule.body.positive.iter().all(|b| b.filters.is_empty()));
    assert_eq!(plan.rule.body.positive[0].stream, frag.sink);
    assert_eq!(plan.rule.head, rule.head);
}

#[test]
fn split_reid_pushes_what_each_block_binds() {
    let rule = reid_split();
    let registry = Registry::new(vec![node("root", &[]), node("a", &["tracks"]), node("b", &["ssr"])]).unwrap();
    let plan = Rewriter::new().rewrite(&rule, &registry, "root").unwrap();
    plan.check().unwrap();
    let targets: Vec<&str> = plan.fragments.iter().map(|f| f.target.as_str()).collect();
    assert_eq!(targets, ["a", "b"]);
    // ?Te is bound by the second block's `?Trk2 :ends ?Te`, so the whole
    // filter travels with it.
    assert!(plan.fragments[0].pushed.is_empty());
    assert_eq!(plan.fragments[1].pushed.len(), 2);
    assert!(plan.fragments[1].join_vars.iter().any(|v| v.name() == "Trk2"));
    assert!(plan.fragments[0].rule.body.positive[0].window == rule.body.positive[0].window);
}

#[test]
fn rules_over_root_streams_stay_whole() {
    let rule = parse_rule_document(RULE_2).unwrap().remove(0);
    let registry = Registry::new(vec![node("root", &["ssr"]), node("edge", &["other"])]).unwrap();
    let plan = Rewriter::new().rewrite(&rule, &registry, "root").unwrap();
    assert!(plan.fragments.is_empty());
    assert_eq!(plan.rule, rule);
}

#[test]
fn unadvertised_and_ambiguous_streams_are_errors() {
    let rule = parse_rule_document(RULE_2).unwrap().remove(0);
    let registry = Registry::new(vec![node("root", &[])]).unwrap();
    assert!(matches!(
        Rewriter::new().rewrite(&rule, &registry, "root"),
        Err(PlanError::Unadvertised { .. })
    ));
    let registry = Registry::new(vec![node("root", &[]), node("x", &["ssr"]), node("y", &["ssr"])]).unwrap();
    assert!(matches!(
        Rewriter::new().rewrite(&rule, &registry, "root"),
        Err(PlanError::Ambiguous { .. })
    ));
    assert!(matches!(
        Registry::new(vec![node("x", &[]), node("x", &[])]),
        Err(PlanError::DuplicateNode(_))
    ));
}

#[test]
fn fragments_survive_printing() {
    let registry = Registry::new(vec![node("root", &[]), node("a", &["tracks"]), node("b", &["ssr"])]).unwrap();
    let plan = Rewriter::new().rewrite(&reid_split(), &registry, "root").unwrap();
    for f in &plan.fragments {
        let text = pretty_print(&f.rule);
        let back = RuleParser::new().parse(&text).unwrap();
        assert_eq!(back, vec![f.rule.clone()], "{text}");
    }
}

fn reid_trace() -> Trace {
    let mut trace = trace_of(&[
        (1, "tracks", ":trkA :trk :b0."),
        (2, "tracks", ":trkA :trk :b0."),
        (2, "ssr", ":trkA :ends 2. :b0 sosa:isSampleOf :car7."),
        (3, "ssr", "<< :trkB :trk :b1 >> a :Tracklet. << :b1 :vMatch :b0 >> :score 0.9."),
        (4, "ssr", "<< :trkC :trk :b2 >> a :Tracklet. << :b2 :vMatch :b0 >> :score 0.95."),
        (6, "ssr", "<< :trkD :trk :b3 >> a :Tracklet. << :b3 :vMatch :b0 >> :score 0.99."),
        (7, "ssr", "<< :trkE :trk :b4 >> a :Tracklet. << :b4 :vMatch :b0 >> :score 0.5."),
    ]);
    // Track ends and identities are restated every frame.
    for t in 3..8 {
        for f in parse_fact_document(":trkA :ends 2. :b0 sosa:isSampleOf :car7.").unwrap() {
            trace.push(stream("ssr"), f.at(t));
        }
    }
    trace
}

#[test]
fn split_reid_matches_one_engine() {
    let rules = vec![reid_split()];
    let trace = reid_trace();
    let setup = hard_setup();
    let mono = run_monolithic(&rules, &trace, &setup).unwrap();
    let fired: usize = mono.iter().map(|o| o.facts.len()).sum();
    assert!(fired > 0, "the trace should exercise the rule");
    let topo = topology("root", vec![node("root", &[]), node("a", &["tracks"]), node("b", &["ssr"])]);
    let run = run_federated(&topo, &rules, &trace, &setup, RetryPolicy::default()).unwrap();
    assert_eq!(compare(&mono, &run.outputs), Verdict::Equal);
    assert_eq!(run.subscriptions.len(), 2);
    for (id, stats) in &run.stats {
        assert!(stats.audit.is_empty(), "{id}: {:?}", stats.audit);
    }
    assert_eq!(run.stats["a"].served, 1);
    assert_eq!(run.stats["b"].served, 1);
}

#[test]
fn tcp_transport_gives_the_same_output() {
    let rules = vec![reid_split()];
    let trace = reid_trace();
    let setup = hard_setup();
    let mono = run_monolithic(&rules, &trace, &setup).unwrap();
    let tcp = |id: &str, streams: &[&str]| {
        let mut d = node(id, streams);
        d.endpoint = Endpoint::Tcp("127.0.0.1:0".into());
        d
    };
    let topo = topology("root", vec![tcp("root", &[]), tcp("a", &["tracks"]), tcp("b", &["ssr"])]);
    let run = run_federated(&topo, &rules, &trace, &setup, RetryPolicy::default()).unwrap();
    assert_eq!(compare(&mono, &run.outputs), Verdict::Equal);
    let received: u64 = run.stats["root"].facts_received;
    let sent: u64 = run.stats.values().map(|s| s.facts_sent).sum();
    assert_eq!(received, sent);
}

#[test]
fn unreachable_node_is_reported() {
    let free = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = free.local_addr().unwrap().to_string();
    drop(free);
    // A node said to run elsewhere that nobody started.
    let ghost = NodeDescriptor::new("ghost", Endpoint::Remote(addr)).with_stream(stream("ssr"), []);
    let topo = topology("root", vec![node("root", &[]), ghost]);
    let retry = RetryPolicy {
        attempts: 2,
        initial_backoff: Duration::from_millis(5),
        connect_timeout: Duration::from_millis(50),
    };
    let mut fed = Federation::start(&topo, retry).unwrap();
    assert!(fed.node("ghost").is_none());
    let err = fed.install(&parse_rule_document(RULE_2).unwrap(), hard_setup()).unwrap_err();
    assert!(err.is_unreachable(), "{err}");
    assert!(matches!(
        err,
        FederationError::Transport(TransportError::Unreachable { attempts: 2, .. })
    ), "{err:?}");
}

#[test]
fn duplicate_subscriptions_get_fresh_ids_and_unsubscribe_stops_delivery() {
    let rule = parse_rule_document(RULE_2).unwrap().remove(0);
    let topo = topology("root", vec![node("root", &[]), node("edge", &["ssr"])]);
    let mut fed = Federation::start(&topo, RetryPolicy::default()).unwrap();
    let (plans, first) = fed.install(&[rule], hard_setup()).unwrap();
    let second = fed.resubscribe(plans, hard_setup()).unwrap();
    assert_eq!(first.len(), 1);
    assert_eq!(second.len(), 1);
    assert_ne!(first[0].id, second[0].id);
    assert_eq!(fed.node("edge").unwrap().stats().unwrap().served, 2);

    let frame = ":trk1 :trklet :car1 . << :d1 :det :b1 >> sosa:resultTime 0 ; :score 0.9 . \
                 << :trk1 :trk :b1 >> a :Tracklet . :b1 :x 0 ; :y 0 ; :w 10 ; :h 10 .";
    let facts: Vec<(StreamId, TimestampedFact)> = parse_fact_document(frame)
        .unwrap()
        .into_iter()
        .map(|f| (stream("ssr"), f.at(0)))
        .collect();
    fed.tick(0, facts.clone()).unwrap();
    let before = fed.node("root").unwrap().stats().unwrap().received_by_sub.clone();
    assert!(before[&first[0].id] > 0);

    fed.unsubscribe(first[0].id).unwrap();
    assert!(matches!(fed.unsubscribe(first[0].id), Err(FederationError::UnknownSubscription(_))));
    let shifted: Vec<_> = facts.into_iter().map(|(s, f)| (s, f.at(1))).collect();
    fed.tick(1, shifted).unwrap();
    let stats = fed.node("root").unwrap().stats().unwrap();
    assert_eq!(stats.received_by_sub[&first[0].id], before[&first[0].id]);
    assert!(stats.received_by_sub[&second[0].id] > before[&second[0].id]);
    assert!(stats.audit.is_empty(), "{:?}", stats.audit);
    assert_eq!(fed.node("edge").unwrap().stats().unwrap().served, 1);
}

#[test]
fn topology_and_trace_files() {
    let prefixes = streamfuse::rdf::PrefixMap::prelude();
    let text = "# three nodes\nnode hub inproc\nnode cam 127.0.0.1:0\nnode far remote 10.0.0.9:7000\nstream cam <:ssr> :trk :score\nstream hub <http://x/s>\nroot hub\n";
    let topo = parse_topology(text, &prefixes).unwrap();
    assert_eq!(topo.root, "hub");
    assert_eq!(topo.nodes[1].endpoint, Endpoint::Tcp("127.0.0.1:0".into()));
    assert_eq!(topo.nodes[2].endpoint, Endpoint::Remote("10.0.0.9:7000".into()));
    assert_eq!(topo.nodes[1].streams[&stream("ssr")], BTreeSet::from([ns("trk"), ns("score")]));
    assert!(topo.nodes[0].streams.contains_key(&StreamId(streamfuse::rdf::Iri::new("http://x/s"))));
    for bad in ["node a inproc\nnode a inproc\n", "stream a <:s>\n", "nodes a\n", "node a remote\n", "node a inproc\nroot b\n"] {
        assert!(parse_topology(bad, &prefixes).is_err(), "{bad}");
    }

    let trace = parse_trace("# t\n3\t<:ssr>\t:a :p :b . :a :q 2 .\n5\t<:cam>\t:c :p :d .\n", &prefixes).unwrap();
    assert_eq!(trace.span(), vec![3, 4, 5]);
    assert_eq!(trace.at(3).len(), 2);
    assert!(trace.at(3).iter().all(|(s, f)| *s == stream("ssr") && f.timestamp() == 3));
    assert!(parse_trace("x\t<:ssr>\t:a :p :b .\n", &prefixes).is_err());
    assert!(parse_trace("1 <:ssr> :a :p :b .\n", &prefixes).is_err());
}

#[test]
fn random_rules_federate_like_one_engine() {
    let started = Instant::now();
    let stats = check_corpus(0xfed, 100, 4).unwrap_or_else(|e| panic!("{e}"));
    println!("{stats:?}");
    assert!(stats.with_fragments >= 50 && stats.remote_naf >= 5 && stats.fired >= 40, "{stats:?}");
    assert!(started.elapsed() < Duration::from_secs(60));
}

#[test]
fn soft_rules_federate_through_world_selection() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x50f7);
    let mut setup = hard_setup();
    let mut weights = streamfuse::fusion::RuleWeights::new();
    let (mut runs, mut fired, mut i) = (0, 0, 0);
    while runs < 20 {
        let mut rules = Vec::new();
        while rules.len() < 3 {
            i += 1;
            if let Some(mut r) = random_rule(&mut rng, i, 4) {
                let text = pretty_print(&r).replacen(&format!("fr{i} "), &format!("rule_w_{i} "), 1);
                r = parse_rule_document(&text).unwrap().remove(0);
                assert_eq!(r.kind, streamfuse::ql::RuleKind::Soft);
                weights.set(r.id.clone(), rng.gen_range(0.2..2.0));
                rules.push(r);
            }
        }
        setup.weights = Some(weights.clone());
        let topo = random_topology(&mut rng);
        let trace = random_trace(&mut rng, 10);
        let mono = run_monolithic(&rules, &trace, &setup).unwrap();
        let run = run_federated(&topo, &rules, &trace, &setup, RetryPolicy::default()).unwrap();
        let verdict = compare(&mono, &run.outputs);
        assert!(verdict.is_equal(), "{verdict:?}\n{:#?}", run.plans);
        fired += usize::from(mono.iter().any(|o| !o.facts.is_empty()));
        runs += 1;
    }
    assert!(fired >= 10, "{fired}");
}
