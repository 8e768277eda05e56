//! `streamfuse`: parse rules, run the tracking pipeline, learn soft-rule
//! weights, compare federated with single-engine evaluation, and print the
//! configuration.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 unreadable or invalid
//! input, 3 unreachable federation node.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "streamfuse", version, about = "Semantic stream fusion over RDF-star streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Configuration shared by every command.
#[derive(Args, Debug, Clone, Default)]
pub struct ConfigArgs {
    /// Flat `key = value` configuration file.
    #[arg(long, value_name = "FILE", global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a rule file and print normalized rules with their analysis.
    Parse {
        rules: PathBuf,
        /// Dump the syntax tree instead.
        #[arg(long)]
        ast: bool,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Track detections through the rule pipeline.
    Run {
        /// Detections CSV: frame,x,y,w,h,score,label,appearance_id.
        #[arg(long)]
        detections: PathBuf,
        /// Rule file; the built-in tracking rules by default.
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Soft-rule weights (`rule<TAB>weight`).
        #[arg(long)]
        weights: Option<PathBuf>,
        /// MOT tracks output; stdout by default.
        #[arg(long)]
        tracks: Option<PathBuf>,
        /// Turtle-star file receiving every emitted fact.
        #[arg(long)]
        facts: Option<PathBuf>,
        /// Explanation records (TSV).
        #[arg(long)]
        explain: Option<PathBuf>,
        /// Report predicted boxes of unmatched tracklets.
        #[arg(long, value_name = "BOOL")]
        emit_predictions: Option<bool>,
        /// Fail on the first evaluation error instead of counting it.
        #[arg(long)]
        strict: bool,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Learn soft-rule weights from labeled associations.
    Train {
        #[arg(long)]
        detections: PathBuf,
        /// Gold association facts: `tick<TAB>statements` lines.
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Initial weights; every soft rule starts at 1 otherwise.
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        /// `confidence` or `count`.
        #[arg(long)]
        features: Option<String>,
        /// Learned weights output.
        #[arg(long)]
        out: PathBuf,
        /// Training report; stderr summary only by default.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run rules federated over a topology and compare with one engine.
    Federate {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        rules: PathBuf,
        /// Trace: `tick<TAB>stream<TAB>statements` lines.
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Directory for per-node outputs, plans and the verdict.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Print the effective configuration.
    Config {
        /// Print the built-in defaults, ignoring --config and --set.
        #[arg(long)]
        defaults: bool,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Parse { rules, ast, config } => commands::parse(&config, &rules, ast),
        Command::Run {
            detections,
            rules,
            weights,
            tracks,
            facts,
            explain,
            emit_predictions,
            strict,
            config,
        } => commands::run(
            &config,
            commands::RunArgs {
                detections,
                rules,
                weights,
                tracks,
                facts,
                explain,
                emit_predictions,
                strict,
            },
        ),
        Command::Train {
            detections,
            labels,
            rules,
            init,
            lr,
            epochs,
            features,
            out,
            report,
            config,
        } => commands::train(
            &config,
            commands::TrainArgs {
                detections,
                labels,
                rules,
                init,
                lr,
                epochs,
                features,
                out,
                report,
            },
        ),
        Command::Federate {
            topology,
            rules,
            trace,
            weights,
            out,
            config,
        } => commands::federate(&config, &topology, &rules, &trace, weights.as_deref(), out.as_deref()),
        Command::Config { defaults, config } => commands::config(&config, defaults),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", one_line(&f.error));
            ExitCode::from(f.code)
        }
    }
}

/// The error and its causes on one line.
fn one_line(e: &anyhow::Error) -> String {
    e.chain()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(": ")
        .replace(['\n', '\r'], " ")
}
