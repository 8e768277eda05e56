//! Brute-force window contents and from-scratch rule evaluation over the
//! full fact history, with seeded generators of streams and programs.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use streamfuse::ql::{parse_rule_document, PatternTerm, Rule, StreamBlock, TriplePattern, WindowSpec};
use streamfuse::rdf::vocab::ns;
use streamfuse::rdf::{StreamId, Term, Tick, TimestampedFact};
use streamfuse::runtime::{eval_filter, match_fact, stratify, Binding, Engine, NoGeometry, RuntimeConfig, WindowState};

pub fn stream() -> StreamId {
    StreamId(ns("ssr"))
}

pub fn fact(s: u8, p: &str, o: u8, ts: Tick) -> TimestampedFact {
    TimestampedFact::from_parts(ns(&format!("c{s}")), ns(p), ns(&format!("c{o}")), ts)
}

pub fn wrap(id: &str, q: &str) -> String {
    format!("{id} a sh:NodeShape ; sh:rule [ sh:construct \"\"\"{q}\"\"\" ] .\n")
}

pub const PREDS: [&str; 4] = ["p", "q", "h", "g"];
pub const VARS: [&str; 3] = ["X", "Y", "Z"];

#[derive(Clone, Debug)]
pub enum Slot {
    Var(usize),
    Const(u8),
}

impl Slot {
    pub fn text(&self) -> String {
        match self {
            Slot::Var(i) => format!("?{}", VARS[*i]),
            Slot::Const(c) => format!(":c{c}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GenBlock {
    pub window: Option<u64>,
    pub patterns: Vec<(Slot, usize, Slot)>,
    pub min_tick: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct GenRule {
    pub positive: Vec<GenBlock>,
    pub naf: Option<GenBlock>,
    pub head_pred: usize,
}

pub fn block_text(keyword: &str, b: &GenBlock, tvar: &str) -> String {
    let window = b.window.map(|n| format!(" window[{n} sec]")).unwrap_or_default();
    let pats: Vec<String> = b
        .patterns
        .iter()
        .map(|(s, p, o)| format!("{} :{} {} .", s.text(), PREDS[*p], o.text()))
        .collect();
    let filter = b.min_tick.map(|k| format!(" FILTER(?{tvar} >= {k})")).unwrap_or_default();
    format!("{keyword}STREAM <:ssr> @?{tvar}{window} {{ {}{filter} }}", pats.join(" "))
}

pub fn rule_text(i: usize, r: &GenRule) -> String {
    let mut bound = BTreeSet::new();
    for b in &r.positive {
        for (s, _, o) in &b.patterns {
            for x in [s, o] {
                if let Slot::Var(v) = x {
                    bound.insert(*v);
                }
            }
        }
    }
    let mut vars = bound.iter().map(|v| format!("?{}", VARS[*v]));
    let hs = vars.next().unwrap_or(":c0".into());
    let ho = vars.next().unwrap_or(":c1".into());
    let mut body: Vec<String> = r
        .positive
        .iter()
        .enumerate()
        .map(|(bi, b)| block_text("", b, &format!("T{bi}")))
        .collect();
    if let Some(n) = &r.naf {
        body.push(block_text("NAF ", n, "TN"));
    }
    wrap(
        &format!("ssr:r{i}"),
        &format!("CONSTRUCT {{ {hs} :{} {ho} }} WHERE {{ {} }}", PREDS[r.head_pred], body.join(" ")),
    )
}

/// Recomputes every tick from the full fact history with nested loops.
pub struct Oracle {
    pub rules: Vec<Rule>,
    pub strata: Vec<Vec<usize>>,
    pub history: BTreeSet<TimestampedFact>,
}

pub fn visible(spec: WindowSpec, t: Tick, ts: Tick) -> bool {
    match spec {
        WindowSpec::Now => ts == t,
        WindowSpec::Range(n) => ts <= t && ts + n > t,
    }
}

impl Oracle {
    fn extend(&self, block: &StreamBlock, t: Tick, seeds: Vec<Binding>) -> Vec<Binding> {
        let facts: Vec<&TimestampedFact> =
            self.history.iter().filter(|f| visible(block.window, t, f.timestamp())).collect();
        let mut rel = seeds;
        for p in &block.patterns {
            let mut next = Vec::new();
            for b in &rel {
                for f in &facts {
                    if let Some(m) = match_fact(p, f, block.timestamp.as_ref()) {
                        if let Some(j) = b.merge(&m) {
                            next.push(j);
                        }
                    }
                }
            }
            rel = next;
        }
        rel.retain(|b| block.filters.iter().all(|f| eval_filter(f, b, &NoGeometry).unwrap_or(false)));
        rel
    }

    fn solve(&self, rule: &Rule, t: Tick) -> Vec<Binding> {
        let mut rel = vec![Binding::new()];
        for b in &rule.body.positive {
            rel = self.extend(b, t, rel);
        }
        rel.retain(|b| !rule.body.naf.iter().any(|nb| !self.extend(nb, t, vec![b.clone()]).is_empty()));
        rel
    }

    pub fn tick(&mut self, input: &[TimestampedFact], t: Tick) -> BTreeSet<TimestampedFact> {
        self.history.extend(input.iter().cloned());
        let mut out = BTreeSet::new();
        for stratum in self.strata.clone() {
            let mut derived = Vec::new();
            for &ri in &stratum {
                let rule = &self.rules[ri];
                for b in self.solve(rule, t) {
                    for h in &rule.head {
                        derived.push(ground_head(h, &b, t));
                    }
                }
            }
            for f in derived {
                out.insert(f.clone());
                self.history.insert(f);
            }
        }
        out
    }
}

pub fn ground_head(p: &TriplePattern, b: &Binding, t: Tick) -> TimestampedFact {
    let TriplePattern::Triple {
        subject,
        predicate,
        object,
        ..
    } = p
    else {
        unreachable!("generated heads are plain triples")
    };
    let g = |x: &PatternTerm| match x {
        PatternTerm::Var(v) => b.get(v).cloned().expect("safe head"),
        PatternTerm::Const(c) => c.clone(),
        _ => unreachable!(),
    };
    let Term::Iri(pred) = g(predicate) else { unreachable!() };
    TimestampedFact::from_parts(g(subject), pred, g(object), t)
}


// Seeded counterparts of the property strategies.

fn random_slot(rng: &mut ChaCha8Rng) -> Slot {
    if rng.gen_bool(0.75) {
        Slot::Var(rng.gen_range(0..VARS.len()))
    } else {
        Slot::Const(rng.gen_range(0..3))
    }
}

/// A block whose window, when present, is `Range(1..8)`.
pub fn random_block(rng: &mut ChaCha8Rng, max_patterns: usize) -> GenBlock {
    GenBlock {
        window: rng.gen_bool(0.7).then(|| rng.gen_range(1..8)),
        patterns: (0..rng.gen_range(1..=max_patterns))
            .map(|_| (random_slot(rng), rng.gen_range(0..PREDS.len()), random_slot(rng)))
            .collect(),
        min_tick: rng.gen_bool(0.3).then(|| rng.gen_range(0..5)),
    }
}

pub fn random_rule(rng: &mut ChaCha8Rng) -> GenRule {
    GenRule {
        positive: (0..rng.gen_range(1..=2)).map(|_| random_block(rng, 2)).collect(),
        naf: rng.gen_bool(0.4).then(|| random_block(rng, 1)),
        head_pred: rng.gen_range(2..PREDS.len()),
    }
}

/// Ticks of `(subject, predicate, object)` arrivals over `p` and `q`.
pub fn random_batches(rng: &mut ChaCha8Rng, ticks: usize) -> Vec<Vec<(u8, usize, u8)>> {
    (0..ticks)
        .map(|_| (0..rng.gen_range(0..6)).map(|_| (rng.gen_range(0..3), rng.gen_range(0..2), rng.gen_range(0..3))).collect())
        .collect()
}

/// Feeds a seeded stream into a `Range(n)` window and compares its contents
/// with a filter over every arrival after each tick. Returns the range.
pub fn check_window(seed: u64) -> Result<u64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..8);
    let mut w = WindowState::new(stream(), WindowSpec::Range(n));
    let mut all: Vec<TimestampedFact> = Vec::new();
    let mut t: Tick = 0;
    for _ in 0..rng.gen_range(1..60) {
        t += rng.gen_range(0..3);
        let f = fact(rng.gen_range(0..4), "p", rng.gen_range(0..3), t);
        if !w.insert(f.clone()) {
            return Err(format!("seed {seed}: in-order fact refused at {t}"));
        }
        all.push(f);
        w.advance(t);
        let want: Vec<&TimestampedFact> = all.iter().filter(|f| f.timestamp() + n > t && f.timestamp() <= t).collect();
        let got: Vec<&TimestampedFact> = w.contents().collect();
        if got != want {
            return Err(format!("seed {seed}: Range({n}) at {t} holds {} facts, expected {}", got.len(), want.len()));
        }
    }
    Ok(n)
}

/// Runs a seeded program incrementally and from scratch over the same
/// stream. `Ok(false)` means the program was not stratifiable.
pub fn check_incremental(seed: u64) -> Result<bool, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rules: Vec<GenRule> = (0..rng.gen_range(1..4)).map(|_| random_rule(&mut rng)).collect();
    let ticks = rng.gen_range(1..12);
    let batches = random_batches(&mut rng, ticks);
    compare_with_oracle(&rules, &batches)
}

pub fn compare_with_oracle(rules: &[GenRule], batches: &[Vec<(u8, usize, u8)>]) -> Result<bool, String> {
    let doc: String = rules.iter().enumerate().map(|(i, r)| rule_text(i, r)).collect();
    let parsed = parse_rule_document(&doc).map_err(|e| e.to_string())?;
    let Ok(strata) = stratify(&parsed) else {
        return Ok(false);
    };
    let mut engine = Engine::new(RuntimeConfig::default());
    engine.register_stream(stream()).map_err(|e| e.to_string())?;
    engine.load_rules(parsed.clone()).map_err(|e| e.to_string())?;
    let mut oracle = Oracle {
        rules: parsed,
        strata,
        history: BTreeSet::new(),
    };
    for (t, batch) in batches.iter().enumerate() {
        let t = t as Tick;
        let input: Vec<TimestampedFact> = batch.iter().map(|(s, p, o)| fact(*s, PREDS[*p], *o, t)).collect();
        engine.push(&stream(), input.clone()).map_err(|e| e.to_string())?;
        let got: BTreeSet<TimestampedFact> =
            engine.evaluate_tick(t).map_err(|e| e.to_string())?.into_iter().map(|e| e.fact).collect();
        let want = oracle.tick(&input, t);
        if got != want {
            return Err(format!("tick {t}: {} derived, expected {}, program\n{doc}", got.len(), want.len()));
        }
    }
    Ok(true)
}
