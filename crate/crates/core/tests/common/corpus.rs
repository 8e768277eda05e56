//! Random federation corpus: rules, traces and topologies, checked against
//! single-engine evaluation.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use streamfuse::federator::*;
use streamfuse::ql::{parse_rule_document, pretty_print, Rule};
use streamfuse::rdf::vocab::ns;
use streamfuse::rdf::{Literal, StreamId, Term, TimestampedFact};
use streamfuse::runtime::RuntimeConfig;

pub fn stream(name: &str) -> StreamId {
    StreamId(ns(name))
}

pub fn wrap(id: &str, query: &str) -> String {
    format!("{id} a sh:NodeShape ; sh:rule [ a sh:CQELSRule ; sh:construct \"\"\"{query}\"\"\" ] .\n")
}

pub fn node(id: &str, streams: &[&str]) -> NodeDescriptor {
    streams
        .iter()
        .fold(NodeDescriptor::new(id, Endpoint::InProc), |d, s| d.with_stream(stream(s), []))
}

pub fn topology(root: &str, nodes: Vec<NodeDescriptor>) -> Topology {
    Topology {
        root: root.into(),
        nodes,
    }
}

pub fn hard_setup() -> RootSetup {
    RootSetup {
        runtime: RuntimeConfig {
            feedback: false,
            ..RuntimeConfig::default()
        },
        ..RootSetup::default()
    }
}

// Random corpus: hard rules with constant predicates, up to three positive
// blocks over up to three streams, windows, NAF and filters that either stay in
// a block or straddle blocks.

pub const STREAMS: [&str; 3] = ["s0", "s1", "s2"];
pub const VARS: [&str; 4] = ["a", "b", "c", "d"];

pub fn random_block(rng: &mut ChaCha8Rng, vars: &mut Vec<&'static str>, negated: bool) -> String {
    let s = STREAMS[rng.gen_range(0..STREAMS.len())];
    let window = match rng.gen_range(0..3) {
        0 => String::new(),
        _ => format!(" window[{} sec]", rng.gen_range(1..4)),
    };
    let mut body = String::new();
    for _ in 0..rng.gen_range(1..3) {
        let x = VARS[rng.gen_range(0..VARS.len())];
        let y = VARS[rng.gen_range(0..VARS.len())];
        body += &format!("?{x} :p{} ?{y} . ", rng.gen_range(0..2));
        vars.extend([x, y]);
    }
    if !negated && rng.gen_bool(0.5) {
        let x = vars[rng.gen_range(0..vars.len())];
        body += &format!("?{x} :val ?n{x} . ");
        if rng.gen_bool(0.6) {
            body += &format!("FILTER (?n{x} > {}) ", rng.gen_range(0..3));
        }
        vars.push(Box::leak(format!("n{x}").into_boxed_str()));
    }
    format!("{}STREAM <:{s}>{window} {{ {body}}}", if negated { "NAF " } else { "" })
}

/// A random rule with at most `max_blocks` stream blocks, negated ones
/// included. `None` when the draw is not a valid rule.
pub fn random_rule(rng: &mut ChaCha8Rng, i: usize, max_blocks: usize) -> Option<Rule> {
    let mut bound = Vec::new();
    let mut items = Vec::new();
    let positive = if max_blocks > 3 { rng.gen_range(1..4) } else { rng.gen_range(1..=max_blocks) };
    for _ in 0..positive {
        items.push(random_block(rng, &mut bound, false));
    }
    let numeric: Vec<&str> = bound.iter().copied().filter(|v| v.starts_with('n')).collect();
    if numeric.len() >= 2 && rng.gen_bool(0.6) {
        items.push(format!("FILTER (?{} <= ?{} + 1)", numeric[0], numeric[numeric.len() - 1]));
    }
    if positive < max_blocks && rng.gen_bool(0.3) {
        let mut naf_vars = Vec::new();
        items.push(random_block(rng, &mut naf_vars, true));
    }
    let plain: Vec<&str> = bound.iter().copied().filter(|v| !v.starts_with('n')).collect();
    let x = plain[rng.gen_range(0..plain.len())];
    let y = bound[rng.gen_range(0..bound.len())];
    let q = format!("CONSTRUCT {{ ?{x} :h{} ?{y} . }} WHERE {{ {} }}", rng.gen_range(0..3), items.join(" "));
    parse_rule_document(&wrap(&format!("ssr:fr{i}"), &q)).ok().map(|mut r| r.remove(0))
}

pub fn random_trace(rng: &mut ChaCha8Rng, ticks: u64) -> Trace {
    let mut trace = Trace::default();
    for t in 0..ticks {
        for s in STREAMS {
            for _ in 0..rng.gen_range(0..7) {
                let e = |rng: &mut ChaCha8Rng| Term::Iri(ns(&format!("e{}", rng.gen_range(0..3))));
                let subject = e(rng);
                let fact = if rng.gen_bool(0.3) {
                    TimestampedFact::from_parts(subject, ns("val"), Term::Literal(Literal::integer(rng.gen_range(0..6))), t)
                } else {
                    let p = ns(&format!("p{}", rng.gen_range(0..2)));
                    TimestampedFact::from_parts(subject, p, e(rng), t)
                };
                trace.push(stream(s), fact);
            }
        }
    }
    trace
}

pub fn random_topology(rng: &mut ChaCha8Rng) -> Topology {
    let n = rng.gen_range(2..4);
    let mut nodes: Vec<NodeDescriptor> = (0..n).map(|i| NodeDescriptor::new(format!("n{i}"), Endpoint::InProc)).collect();
    for s in STREAMS {
        let owner = rng.gen_range(0..n);
        nodes[owner] = nodes[owner].clone().with_stream(stream(s), []);
    }
    topology(&format!("n{}", rng.gen_range(0..n)), nodes)
}


#[derive(Debug, Default)]
pub struct CorpusStats {
    pub rules: usize,
    pub with_fragments: usize,
    pub remote_naf: usize,
    pub fired: usize,
    pub max_blocks_seen: usize,
}

/// Federates `count` random rules, each over its own 2 or 3 node topology
/// and trace, and compares every tick with one engine as a multiset.
pub fn check_corpus(seed: u64, count: usize, max_blocks: usize) -> Result<CorpusStats, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let setup = hard_setup();
    let mut stats = CorpusStats::default();
    let mut i = 0;
    while stats.rules < count {
        i += 1;
        let Some(rule) = random_rule(&mut rng, i, max_blocks) else { continue };
        let topo = random_topology(&mut rng);
        let trace = random_trace(&mut rng, 10);
        let blocks = rule.body.positive.len() + rule.body.naf.len();
        let rules = vec![rule];
        let mono = run_monolithic(&rules, &trace, &setup).map_err(|e| e.to_string())?;
        let run = run_federated(&topo, &rules, &trace, &setup, RetryPolicy::default()).map_err(|e| e.to_string())?;
        for p in &run.plans {
            p.check().map_err(|e| e.to_string())?;
        }
        let verdict = compare(&mono, &run.outputs);
        if !verdict.is_equal() {
            return Err(format!("rule {}: {verdict:?}", pretty_print(&rules[0])));
        }
        for (id, s) in &run.stats {
            if !s.audit.is_empty() {
                return Err(format!("{id}: delivery audit {:?}", s.audit));
            }
        }
        stats.with_fragments += usize::from(!run.plans[0].fragments.is_empty());
        stats.remote_naf += usize::from(run.plans[0].fragments.iter().any(|f| f.negated));
        stats.fired += usize::from(mono.iter().any(|o| !o.facts.is_empty()));
        stats.max_blocks_seen = stats.max_blocks_seen.max(blocks);
        stats.rules += 1;
    }
    Ok(stats)
}
