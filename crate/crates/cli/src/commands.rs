use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use streamfuse::config::EngineConfig;
use streamfuse::federator::{
    compare, parse_topology, parse_trace, run_federated, run_monolithic, FederationError, RootSetup, TickOutput,
    Verdict,
};
use streamfuse::fusion::{parse_weights, write_weights, RuleWeights};
use streamfuse::learner::{collect_samples, parse_gold, train_with, Features};
use streamfuse::ql::{analyze_rule, pretty_print_with, Rule, RuleKind, Safety};
use streamfuse::rdf::{serialize_fact_with, PrefixMap};
use streamfuse::tracker::{explain_frame, parse_detections, TrackingPipeline};

use crate::ConfigArgs;

/// An error with the exit code it maps to.
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

pub const RUNTIME: u8 = 1;
pub const INPUT: u8 = 2;
pub const UNREACHABLE: u8 = 3;

type Outcome = Result<u8, Failure>;

trait Exit<T> {
    fn exit(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Exit<T> for Result<T, E> {
    fn exit(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure { code, error: e.into() })
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .exit(INPUT)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .exit(RUNTIME)
}

fn load_config(args: &ConfigArgs) -> Result<EngineConfig, Failure> {
    let mut c = EngineConfig::default();
    if let Some(p) = &args.config {
        c.apply_text(&read(p)?)
            .with_context(|| format!("in {}", p.display()))
            .exit(INPUT)?;
    }
    for pair in &args.set {
        c.set_pair(pair).with_context(|| format!("--set {pair}")).exit(INPUT)?;
    }
    Ok(c)
}

fn load_rules(cfg: &EngineConfig, path: Option<&Path>) -> Result<Vec<Rule>, Failure> {
    match path {
        Some(p) => cfg
            .rule_parser()
            .parse(&read(p)?)
            .with_context(|| format!("in {}", p.display()))
            .exit(INPUT),
        None => cfg.tracking_rules().context("built-in rules").exit(INPUT),
    }
}

fn load_weights(path: Option<&Path>, prefixes: &PrefixMap) -> Result<RuleWeights, Failure> {
    match path {
        Some(p) => parse_weights(&read(p)?, prefixes)
            .with_context(|| format!("in {}", p.display()))
            .exit(INPUT),
        None => Ok(RuleWeights::new()),
    }
}

fn prefix_header(prefixes: &PrefixMap) -> String {
    prefixes.iter().map(|(p, ns)| format!("@prefix {p}: <{ns}> .\n")).collect()
}

pub fn config(args: &ConfigArgs, defaults: bool) -> Outcome {
    let c = if defaults { EngineConfig::default() } else { load_config(args)? };
    print!("{}", c.to_text());
    Ok(0)
}

pub fn parse(args: &ConfigArgs, path: &Path, ast: bool) -> Outcome {
    let cfg = load_config(args)?;
    let rules = load_rules(&cfg, Some(path))?;
    let prefixes = PrefixMap::prelude();
    let mut out = String::new();
    for r in &rules {
        if ast {
            let _ = writeln!(out, "{r:#?}");
            continue;
        }
        out += &pretty_print_with(r, &prefixes, cfg.tick_seconds);
        out += "\n";
        let report = analyze_rule(r);
        let kind = if r.kind == RuleKind::Soft { "soft" } else { "hard" };
        let _ = writeln!(out, "# rule\t{}\t{kind}", r.id);
        let streams: Vec<String> = report.streams.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "# streams\t{}", streams.join(" "));
        let preds: Vec<String> = report.predicates.iter().map(|p| p.to_string()).collect();
        let _ = writeln!(out, "# predicates\t{}", preds.join(" "));
        for (v, o) in &report.variables {
            let _ = writeln!(
                out,
                "# variable\t{v}\thead={}\tpositive={}\tnaf={}\tfilter={}",
                o.head, o.positive, o.naf, o.filter
            );
        }
        let safety = match &report.safety {
            Safety::Safe => "safe".to_string(),
            Safety::Unsafe(vs) => format!("unsafe {}", vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")),
        };
        let _ = writeln!(out, "# safety\t{safety}\n");
    }
    print!("{out}");
    Ok(0)
}

pub struct RunArgs {
    pub detections: PathBuf,
    pub rules: Option<PathBuf>,
    pub weights: Option<PathBuf>,
    pub tracks: Option<PathBuf>,
    pub facts: Option<PathBuf>,
    pub explain: Option<PathBuf>,
    pub emit_predictions: Option<bool>,
    pub strict: bool,
}

pub fn run(args: &ConfigArgs, run: RunArgs) -> Outcome {
    let mut cfg = load_config(args)?;
    if let Some(e) = run.emit_predictions {
        cfg.emit_predictions = e;
    }
    let prefixes = PrefixMap::prelude();
    let rules = load_rules(&cfg, run.rules.as_deref())?;
    let weights = load_weights(run.weights.as_deref(), &prefixes)?;
    let records = parse_detections(&read(&run.detections)?)
        .with_context(|| format!("in {}", run.detections.display()))
        .exit(INPUT)?;
    let mut pipeline = TrackingPipeline::with_rules(cfg.tracker(), weights, rules, cfg.runtime()).exit(INPUT)?;

    let (mut tracks, mut facts, mut explain) = (String::new(), prefix_header(&prefixes), String::new());
    let mut errors = 0usize;
    let first = records.iter().map(|r| r.frame).min();
    let last = records.iter().map(|r| r.frame).max();
    let frames = first.zip(last).into_iter().flat_map(|(a, b)| a..=b);
    for t in frames {
        let batch: Vec<_> = records.iter().filter(|r| r.frame == t).cloned().collect();
        let frame = match pipeline.step(t, &batch) {
            Ok(f) => f,
            Err(e) if !run.strict => {
                errors += 1;
                log::warn!("frame {t}: {e}");
                continue;
            }
            Err(e) => return Err(anyhow!(e).context(format!("frame {t}"))).exit(RUNTIME),
        };
        for r in &frame.rows {
            tracks += &r.to_csv();
            tracks.push('\n');
        }
        for e in &frame.emitted {
            facts += &serialize_fact_with(&e.fact, &prefixes);
            facts.push('\n');
        }
        for rec in explain_frame(&frame, &prefixes) {
            explain += &rec.to_tsv(&prefixes);
            explain.push('\n');
        }
    }
    match &run.tracks {
        Some(p) => write(p, &tracks)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(tracks.as_bytes()).exit(RUNTIME)?;
        }
    }
    if let Some(p) = &run.facts {
        write(p, &facts)?;
    }
    if let Some(p) = &run.explain {
        write(p, &explain)?;
    }
    if errors > 0 {
        eprintln!("warning: {errors} frame(s) failed to evaluate");
    }
    Ok(0)
}

pub struct TrainArgs {
    pub detections: PathBuf,
    pub labels: PathBuf,
    pub rules: Option<PathBuf>,
    pub init: Option<PathBuf>,
    pub lr: Option<f64>,
    pub epochs: Option<usize>,
    pub features: Option<String>,
    pub out: PathBuf,
    pub report: Option<PathBuf>,
}

pub fn train(args: &ConfigArgs, train: TrainArgs) -> Outcome {
    let mut cfg = load_config(args)?;
    if let Some(lr) = train.lr {
        cfg.set("learn.rate", &lr.to_string()).exit(INPUT)?;
    }
    if let Some(n) = train.epochs {
        cfg.max_epochs = n;
    }
    if let Some(f) = &train.features {
        cfg.features = f
            .parse::<Features>()
            .map_err(|_| anyhow!("--features must be count or confidence, got {f:?}"))
            .exit(INPUT)?;
    }
    cfg.validate().exit(INPUT)?;
    let prefixes = PrefixMap::prelude();
    let rules = load_rules(&cfg, train.rules.as_deref())?;
    let init = load_weights(train.init.as_deref(), &prefixes)?;
    let records = parse_detections(&read(&train.detections)?)
        .with_context(|| format!("in {}", train.detections.display()))
        .exit(INPUT)?;
    let gold = parse_gold(&read(&train.labels)?, &prefixes)
        .with_context(|| format!("in {}", train.labels.display()))
        .exit(INPUT)?;
    let mut pipeline = TrackingPipeline::with_rules(cfg.tracker(), init.clone(), rules, cfg.runtime()).exit(INPUT)?;
    let init = pipeline.weights.clone();
    let samples = collect_samples(&mut pipeline, &records, &gold).exit(RUNTIME)?;
    if samples.is_empty() {
        eprintln!("warning: no frame has association hypotheses; weights unchanged");
        write(&train.out, &write_weights(&init))?;
        return Ok(0);
    }
    let report = train_with(&samples, &init, &cfg.train()).exit(INPUT)?;
    for inf in &report.infeasible {
        let missing: Vec<String> = inf.missing.iter().map(|f| serialize_fact_with(f, &prefixes)).collect();
        eprintln!(
            "warning: sample {} (tick {}) skipped, labels no rule derives: {}",
            inf.index,
            inf.tick,
            missing.join(" ")
        );
    }
    write(&train.out, &write_weights(&report.weights))?;
    let mut text = String::new();
    let _ = writeln!(text, "samples\t{}", samples.len());
    let _ = writeln!(text, "infeasible\t{}", report.infeasible.len());
    let _ = writeln!(text, "features\t{}", cfg.features);
    let _ = writeln!(text, "epochs\t{}", report.epochs);
    let _ = writeln!(text, "converged\t{}", report.converged);
    let per_epoch: Vec<String> = report.mismatches.iter().map(|m| m.to_string()).collect();
    let _ = writeln!(text, "mismatches\t{}", per_epoch.join(","));
    for (r, w) in report.weights.iter() {
        let _ = writeln!(text, "weight\t{}\t{w}", r.as_str());
    }
    match &train.report {
        Some(p) => write(p, &text)?,
        None => eprint!("{text}"),
    }
    Ok(0)
}

fn federation_failure(e: FederationError) -> Failure {
    let code = if e.is_unreachable() {
        UNREACHABLE
    } else {
        match e {
            FederationError::Plan(_) | FederationError::Rules(_) | FederationError::Topology { .. } | FederationError::Trace { .. } => {
                INPUT
            }
            _ => RUNTIME,
        }
    };
    Failure { code, error: e.into() }
}

fn outputs_text(outputs: &[TickOutput], prefixes: &PrefixMap) -> String {
    outputs
        .iter()
        .flat_map(|o| o.facts.iter().map(move |f| format!("{}\t{}\n", o.tick, serialize_fact_with(f, prefixes))))
        .collect()
}

pub fn federate(
    args: &ConfigArgs,
    topology: &Path,
    rules: &Path,
    trace: &Path,
    weights: Option<&Path>,
    out: Option<&Path>,
) -> Outcome {
    let cfg = load_config(args)?;
    let prefixes = PrefixMap::prelude();
    let topo = parse_topology(&read(topology)?, &prefixes)
        .map_err(federation_failure)
        .map_err(|f| Failure {
            error: f.error.context(format!("in {}", topology.display())),
            ..f
        })?;
    let rules = load_rules(&cfg, Some(rules))?;
    let trace = parse_trace(&read(trace)?, &prefixes).map_err(federation_failure)?;
    let soft = rules.iter().any(|r| r.kind == RuleKind::Soft);
    let setup = RootSetup {
        runtime: streamfuse::runtime::RuntimeConfig {
            feedback: false,
            ..cfg.runtime()
        },
        weights: soft.then(|| load_weights(weights, &prefixes)).transpose()?,
        static_graph: Vec::new(),
    };
    let mono = run_monolithic(&rules, &trace, &setup).map_err(federation_failure)?;
    let run = run_federated(&topo, &rules, &trace, &setup, cfg.retry()).map_err(federation_failure)?;
    let verdict = compare(&mono, &run.outputs);
    let verdict_line = match &verdict {
        Verdict::Equal => "verdict\tEQUAL\n".to_string(),
        Verdict::Differ { tick, missing, extra } => {
            format!("verdict\tDIFFER\ttick={tick}\tmissing={}\textra={}\n", missing.len(), extra.len())
        }
    };
    if let Some(dir) = out {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create {}", dir.display()))
            .exit(RUNTIME)?;
        write(&dir.join("monolithic.tsv"), &outputs_text(&mono, &prefixes))?;
        for (node, stats) in &run.stats {
            let mut text = String::new();
            if *node == topo.root {
                text += &outputs_text(&run.outputs, &prefixes);
            }
            let _ = writeln!(text, "# served\t{}", stats.served);
            let _ = writeln!(text, "# facts_sent\t{}", stats.facts_sent);
            let _ = writeln!(text, "# facts_received\t{}", stats.facts_received);
            for a in &stats.audit {
                let _ = writeln!(text, "# audit\t{a}");
            }
            write(&dir.join(format!("{node}.tsv")), &text)?;
        }
        let mut plan = String::new();
        for (p, sub) in run.plans.iter().zip(0..) {
            let _ = writeln!(plan, "# plan {sub}: {} at {}", p.original.id, p.root);
            plan += &pretty_print_with(&p.rule, &prefixes, cfg.tick_seconds);
            plan.push('\n');
            for f in &p.fragments {
                let _ = writeln!(plan, "# fragment for {} -> {}", f.target, f.sink);
                plan += &pretty_print_with(&f.rule, &prefixes, cfg.tick_seconds);
                plan.push('\n');
            }
        }
        write(&dir.join("plan.ttl"), &plan)?;
        write(&dir.join("verdict.tsv"), &verdict_line)?;
    }
    print!("{verdict_line}");
    Ok(if verdict.is_equal() { 0 } else { RUNTIME })
}
