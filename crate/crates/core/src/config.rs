//! Every tunable knob in one flat `key = value` file.

use std::fmt::Write as _;
use std::time::Duration;

use crate::federator::RetryPolicy;
use crate::learner::{Features, TrainConfig};
use crate::ql::{BinOp, Builtin, FilterExpr, Rule, RuleError, RuleParser, DEFAULT_SOFT_RULE_PATTERN};
use crate::rdf::vocab::ssr;
use crate::rdf::{Literal, Term};
use crate::runtime::{RuntimeConfig, DEFAULT_FIXPOINT_CAP};
use crate::tracker::{tracking_rules, KalmanParams, TrackerConfig};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("config line {line}: expected key = value")]
    Syntax { line: usize },
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("config key {key}: bad value {value:?} ({expected})")]
    BadValue { key: String, value: String, expected: &'static str },
    #[error("config key {key}: {message}")]
    OutOfRange { key: String, message: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EngineConfig {
    pub tick_seconds: f64,
    /// IoU gate of the built-in association rule.
    pub iou_gate: f64,
    /// Detection score gate of the built-in association rule; also the
    /// score a detection needs to start a tracklet.
    pub score_gate: f64,
    pub vmatch_score: f64,
    pub max_age: u32,
    pub min_hits: u32,
    pub emit_predictions: bool,
    pub kalman: KalmanParams,
    pub same_tick_fixpoint: bool,
    pub fixpoint_cap: usize,
    pub soft_rule_id_pattern: String,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub features: Features,
    pub connect_attempts: u32,
    pub initial_backoff_ms: u64,
    pub connect_timeout_ms: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        let tracker = TrackerConfig::default();
        let retry = RetryPolicy::default();
        let learn = TrainConfig::default();
        EngineConfig {
            tick_seconds: 1.0,
            iou_gate: 0.8,
            score_gate: tracker.spawn_score,
            vmatch_score: tracker.vmatch_score,
            max_age: tracker.max_age,
            min_hits: tracker.min_hits,
            emit_predictions: tracker.emit_predictions,
            kalman: tracker.kalman,
            same_tick_fixpoint: false,
            fixpoint_cap: DEFAULT_FIXPOINT_CAP,
            soft_rule_id_pattern: DEFAULT_SOFT_RULE_PATTERN.to_string(),
            learning_rate: learn.lr,
            max_epochs: learn.max_epochs,
            features: learn.features,
            connect_attempts: retry.attempts,
            initial_backoff_ms: retry.initial_backoff.as_millis() as u64,
            connect_timeout_ms: retry.connect_timeout.as_millis() as u64,
        }
    }
}

const KEYS: &[&str] = &[
    "tick_seconds",
    "iou_gate",
    "score_gate",
    "vmatch_score",
    "max_age",
    "min_hits",
    "emit_predictions",
    "kalman.sigma_m",
    "kalman.p0_pos",
    "kalman.p0_vel",
    "kalman.q_pos",
    "kalman.q_vel",
    "kalman.q_scale_vel",
    "same_tick_fixpoint",
    "fixpoint_cap",
    "soft_rule_id_pattern",
    "learn.rate",
    "learn.max_epochs",
    "learn.features",
    "federation.connect_attempts",
    "federation.initial_backoff_ms",
    "federation.connect_timeout_ms",
];

impl EngineConfig {
    /// Every key, in file order.
    pub fn keys() -> &'static [&'static str] {
        KEYS
    }

    /// Applies `key = value` lines over the current values. Blank lines
    /// and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: n + 1 })?;
            self.set(k.trim(), v.trim())?;
        }
        self.validate()
    }

    /// Reads a config file over the defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    /// Sets one key; `key=value` overrides go through here.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        fn num<T: std::str::FromStr>(key: &str, value: &str, expected: &'static str) -> Result<T, ConfigError> {
            value.parse().map_err(|_| ConfigError::BadValue {
                key: key.into(),
                value: value.into(),
                expected,
            })
        }
        let real = |v: &str| num::<f64>(key, v, "a number").and_then(|x| finite(key, x));
        let count = |v: &str| num::<u32>(key, v, "a non-negative integer");
        let ms = |v: &str| num::<u64>(key, v, "milliseconds");
        let flag = |v: &str| num::<bool>(key, v, "true or false");
        match key {
            "tick_seconds" => self.tick_seconds = real(value)?,
            "iou_gate" => self.iou_gate = real(value)?,
            "score_gate" => self.score_gate = real(value)?,
            "vmatch_score" => self.vmatch_score = real(value)?,
            "max_age" => self.max_age = count(value)?,
            "min_hits" => self.min_hits = count(value)?,
            "emit_predictions" => self.emit_predictions = flag(value)?,
            "kalman.sigma_m" => self.kalman.sigma_m = real(value)?,
            "kalman.p0_pos" => self.kalman.p0_pos = real(value)?,
            "kalman.p0_vel" => self.kalman.p0_vel = real(value)?,
            "kalman.q_pos" => self.kalman.q_pos = real(value)?,
            "kalman.q_vel" => self.kalman.q_vel = real(value)?,
            "kalman.q_scale_vel" => self.kalman.q_scale_vel = real(value)?,
            "same_tick_fixpoint" => self.same_tick_fixpoint = flag(value)?,
            "fixpoint_cap" => self.fixpoint_cap = num(key, value, "a non-negative integer")?,
            "soft_rule_id_pattern" => self.soft_rule_id_pattern = value.to_string(),
            "learn.rate" => self.learning_rate = real(value)?,
            "learn.max_epochs" => self.max_epochs = num(key, value, "a non-negative integer")?,
            "learn.features" => {
                self.features = value.parse().map_err(|_| ConfigError::BadValue {
                    key: key.into(),
                    value: value.into(),
                    expected: "count or confidence",
                })?
            }
            "federation.connect_attempts" => self.connect_attempts = count(value)?,
            "federation.initial_backoff_ms" => self.initial_backoff_ms = ms(value)?,
            "federation.connect_timeout_ms" => self.connect_timeout_ms = ms(value)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), ConfigError> {
        let (k, v) = pair.split_once('=').ok_or(ConfigError::Syntax { line: 0 })?;
        self.set(k.trim(), v.trim())?;
        self.validate()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let range = |key: &str, message: String| Err(ConfigError::OutOfRange { key: key.into(), message });
        for (key, v) in [("iou_gate", self.iou_gate), ("score_gate", self.score_gate), ("vmatch_score", self.vmatch_score)] {
            if !(0.0..=1.0).contains(&v) {
                return range(key, format!("{v} is outside [0, 1]"));
            }
        }
        if self.max_age < 1 {
            return range("max_age", "must be at least 1".into());
        }
        if self.tick_seconds <= 0.0 {
            return range("tick_seconds", "must be positive".into());
        }
        if self.learning_rate <= 0.0 {
            return range("learn.rate", "must be positive".into());
        }
        if self.soft_rule_id_pattern.is_empty() {
            return range("soft_rule_id_pattern", "must not be empty".into());
        }
        let k = &self.kalman;
        for (key, v) in [
            ("kalman.sigma_m", k.sigma_m),
            ("kalman.p0_pos", k.p0_pos),
            ("kalman.p0_vel", k.p0_vel),
        ] {
            if v <= 0.0 {
                return range(key, "must be positive".into());
            }
        }
        for (key, v) in [("kalman.q_pos", k.q_pos), ("kalman.q_vel", k.q_vel), ("kalman.q_scale_vel", k.q_scale_vel)] {
            if v < 0.0 {
                return range(key, "must not be negative".into());
            }
        }
        Ok(())
    }

    fn value(&self, key: &str) -> String {
        let k = &self.kalman;
        match key {
            "tick_seconds" => self.tick_seconds.to_string(),
            "iou_gate" => self.iou_gate.to_string(),
            "score_gate" => self.score_gate.to_string(),
            "vmatch_score" => self.vmatch_score.to_string(),
            "max_age" => self.max_age.to_string(),
            "min_hits" => self.min_hits.to_string(),
            "emit_predictions" => self.emit_predictions.to_string(),
            "kalman.sigma_m" => k.sigma_m.to_string(),
            "kalman.p0_pos" => k.p0_pos.to_string(),
            "kalman.p0_vel" => k.p0_vel.to_string(),
            "kalman.q_pos" => k.q_pos.to_string(),
            "kalman.q_vel" => k.q_vel.to_string(),
            "kalman.q_scale_vel" => k.q_scale_vel.to_string(),
            "same_tick_fixpoint" => self.same_tick_fixpoint.to_string(),
            "fixpoint_cap" => self.fixpoint_cap.to_string(),
            "soft_rule_id_pattern" => self.soft_rule_id_pattern.clone(),
            "learn.rate" => self.learning_rate.to_string(),
            "learn.max_epochs" => self.max_epochs.to_string(),
            "learn.features" => self.features.to_string(),
            "federation.connect_attempts" => self.connect_attempts.to_string(),
            "federation.initial_backoff_ms" => self.initial_backoff_ms.to_string(),
            "federation.connect_timeout_ms" => self.connect_timeout_ms.to_string(),
            _ => unreachable!("every key has a value"),
        }
    }

    /// The whole configuration as a file `parse` reads back.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for k in KEYS {
            let _ = writeln!(out, "{k} = {}", self.value(k));
        }
        out
    }

    pub fn rule_parser(&self) -> RuleParser {
        RuleParser::new()
            .with_tick_seconds(self.tick_seconds)
            .with_soft_pattern(self.soft_rule_id_pattern.clone())
    }

    pub fn runtime(&self) -> RuntimeConfig {
        RuntimeConfig {
            same_tick_fixpoint: self.same_tick_fixpoint,
            fixpoint_cap: self.fixpoint_cap,
            ..RuntimeConfig::default()
        }
    }

    pub fn tracker(&self) -> TrackerConfig {
        TrackerConfig {
            kalman: self.kalman,
            spawn_score: self.score_gate,
            max_age: self.max_age,
            min_hits: self.min_hits,
            vmatch_score: self.vmatch_score,
            emit_predictions: self.emit_predictions,
            ..TrackerConfig::default()
        }
    }

    pub fn train(&self) -> TrainConfig {
        TrainConfig {
            lr: self.learning_rate,
            max_epochs: self.max_epochs,
            features: self.features,
        }
    }

    pub fn retry(&self) -> RetryPolicy {
        RetryPolicy {
            attempts: self.connect_attempts.max(1),
            initial_backoff: Duration::from_millis(self.initial_backoff_ms),
            connect_timeout: Duration::from_millis(self.connect_timeout_ms.max(1)),
        }
    }

    /// The built-in tracking rules with this configuration's gates in the
    /// IoU association rule.
    pub fn tracking_rules(&self) -> Result<Vec<Rule>, RuleError> {
        let mut rules = tracking_rules()?;
        for r in rules.iter_mut().filter(|r| r.id == ssr("rule_w_2")) {
            for b in &mut r.body.positive {
                for f in &mut b.filters {
                    set_gates(f, self.iou_gate, self.score_gate);
                }
            }
        }
        Ok(rules)
    }
}

fn finite(key: &str, x: f64) -> Result<f64, ConfigError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(ConfigError::BadValue {
            key: key.into(),
            value: x.to_string(),
            expected: "a finite number",
        })
    }
}

/// Rewrites `iou(..) > c` to the IoU gate and `?v > c` to the score gate.
fn set_gates(e: &mut FilterExpr, iou_gate: f64, score_gate: f64) {
    if let FilterExpr::Binary(op, lhs, rhs) = e {
        match (op, lhs.as_ref(), rhs.as_mut()) {
            (BinOp::Gt, FilterExpr::Call(Builtin::Iou, _), FilterExpr::Const(c)) => *c = Term::Literal(Literal::decimal(iou_gate)),
            (BinOp::Gt, FilterExpr::Var(_), FilterExpr::Const(c)) => *c = Term::Literal(Literal::decimal(score_gate)),
            _ => {
                set_gates(lhs, iou_gate, score_gate);
                set_gates(rhs, iou_gate, score_gate);
            }
        }
    }
}
