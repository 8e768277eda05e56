//! Line-delimited text frames exchanged between nodes.
//!
//! ```text
//! HELLO <node>
//! ADVERTISE <stream> <pred>,<pred>,...     (`-` when none are listed)
//! SUB <id> <base64 rule document>
//! ACK <id>
//! FACT <id> <tick> <turtle-star statement>
//! DONE <id> <tick> <facts sent for this tick>
//! UNSUB <id>
//! ERR <id> <reason>
//! ```

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;

use crate::rdf::{parse_fact_document, serialize_fact, Iri, StreamId, Tick, TimestampedFact};

pub type SubId = u64;

#[derive(Clone, Debug, PartialEq)]
pub enum Frame {
    Hello { node: String },
    Advertise { stream: StreamId, predicates: Vec<Iri> },
    Sub { id: SubId, rule: String },
    Ack { id: SubId },
    Fact { id: SubId, tick: Tick, fact: TimestampedFact },
    Done { id: SubId, tick: Tick, count: u64 },
    Unsub { id: SubId },
    Err { id: SubId, reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("bad frame {line:?}: {message}")]
pub struct FrameError {
    pub line: String,
    pub message: String,
}

impl Frame {
    /// The frame as one line, without the newline.
    pub fn encode(&self) -> String {
        match self {
            Frame::Hello { node } => format!("HELLO {node}"),
            Frame::Advertise { stream, predicates } => {
                let preds = if predicates.is_empty() {
                    "-".to_string()
                } else {
                    predicates.iter().map(|p| format!("<{}>", p.as_str())).collect::<Vec<_>>().join(",")
                };
                format!("ADVERTISE <{}> {preds}", stream.iri().as_str())
            }
            Frame::Sub { id, rule } => format!("SUB {id} {}", STANDARD.encode(rule)),
            Frame::Ack { id } => format!("ACK {id}"),
            Frame::Fact { id, tick, fact } => format!("FACT {id} {tick} {}", serialize_fact(fact)),
            Frame::Done { id, tick, count } => format!("DONE {id} {tick} {count}"),
            Frame::Unsub { id } => format!("UNSUB {id}"),
            Frame::Err { id, reason } => format!("ERR {id} {}", reason.replace(['\n', '\r'], " ")),
        }
    }

    pub fn decode(line: &str) -> Result<Frame, FrameError> {
        let line = line.trim_end_matches(['\r', '\n']);
        let bad = |m: &str| FrameError {
            line: line.to_string(),
            message: m.to_string(),
        };
        let (verb, rest) = line.split_once(' ').unwrap_or((line, ""));
        let mut words = rest.splitn(3, ' ');
        let mut next = || words.next().filter(|w| !w.is_empty()).ok_or_else(|| bad("missing field"));
        let id = |w: &str| w.parse::<SubId>().map_err(|_| bad("bad subscription id"));
        let tick = |w: &str| w.parse::<Tick>().map_err(|_| bad("bad tick"));
        match verb {
            "HELLO" if !rest.is_empty() && !rest.contains(' ') => Ok(Frame::Hello { node: rest.to_string() }),
            "ADVERTISE" => {
                let (stream, preds) = rest.split_once(' ').ok_or_else(|| bad("missing predicates"))?;
                let stream = StreamId(angle_iri(stream).ok_or_else(|| bad("bad stream IRI"))?);
                let predicates = if preds == "-" {
                    Vec::new()
                } else {
                    preds
                        .split(',')
                        .map(|p| angle_iri(p).ok_or_else(|| bad("bad predicate IRI")))
                        .collect::<Result<_, _>>()?
                };
                Ok(Frame::Advertise { stream, predicates })
            }
            "SUB" => {
                let id = id(next()?)?;
                let bytes = STANDARD.decode(next()?).map_err(|_| bad("bad base64"))?;
                let rule = String::from_utf8(bytes).map_err(|_| bad("subquery is not UTF-8"))?;
                Ok(Frame::Sub { id, rule })
            }
            "ACK" => Ok(Frame::Ack { id: id(next()?)? }),
            "UNSUB" => Ok(Frame::Unsub { id: id(next()?)? }),
            "FACT" => {
                let id = id(next()?)?;
                let tick = tick(next()?)?;
                let text = next()?;
                let mut facts = parse_fact_document(text).map_err(|e| bad(&e.to_string()))?;
                if facts.len() != 1 {
                    return Err(bad("expected exactly one fact"));
                }
                Ok(Frame::Fact {
                    id,
                    tick,
                    fact: facts.remove(0),
                })
            }
            "DONE" => {
                let id = id(next()?)?;
                let tick = tick(next()?)?;
                let count = next()?.parse().map_err(|_| bad("bad count"))?;
                Ok(Frame::Done { id, tick, count })
            }
            "ERR" => {
                let id = id(next()?)?;
                let reason = words_rest(rest);
                Ok(Frame::Err { id, reason })
            }
            _ => Err(bad("unknown frame")),
        }
    }
}

fn angle_iri(s: &str) -> Option<Iri> {
    let inner = s.strip_prefix('<')?.strip_suffix('>')?;
    (!inner.is_empty() && !inner.contains(['<', '>', ' '])).then(|| Iri::new(inner))
}

/// Everything after the first word of `rest`.
fn words_rest(rest: &str) -> String {
    rest.split_once(' ').map(|(_, r)| r.to_string()).unwrap_or_default()
}
