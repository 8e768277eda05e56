//! Hand-built syntax trees for the three reference rules.
#![allow(dead_code)]

use streamfuse::ql::*;
use streamfuse::rdf::vocab::{ns, rdf_type, sosa, ssr};
use streamfuse::rdf::{Iri, Literal, StreamId, Term};

pub const RULE_1: &str = include_str!("../../fixtures/rule_w_1.ttl");
pub const RULE_2: &str = include_str!("../../fixtures/rule_w_2.ttl");
pub const RULE_3: &str = include_str!("../../fixtures/rule_w_3.ttl");

pub fn v(name: &str) -> PatternTerm {
    PatternTerm::var(name)
}

pub fn var(name: &str) -> Variable {
    Variable::new(name)
}

pub fn c(iri: Iri) -> PatternTerm {
    PatternTerm::Const(Term::Iri(iri))
}

pub fn q(s: PatternTerm, p: Iri, o: PatternTerm) -> QuotedPattern {
    QuotedPattern {
        subject: s,
        predicate: c(p),
        object: o,
    }
}

pub fn t(s: PatternTerm, p: Iri, o: PatternTerm) -> TriplePattern {
    TriplePattern::triple(s, c(p), o)
}

pub fn mention(quoted: QuotedPattern, ts: &str) -> TriplePattern {
    TriplePattern::Mention {
        quoted,
        timestamp: Some(var(ts)),
    }
}

pub fn dec(x: &str) -> FilterExpr {
    FilterExpr::Const(Literal::typed(x, streamfuse::rdf::Datatype::Decimal).unwrap().into())
}

pub fn gt(l: FilterExpr, r: FilterExpr) -> FilterExpr {
    FilterExpr::binary(BinOp::Gt, l, r)
}

pub fn fv(name: &str) -> FilterExpr {
    FilterExpr::Var(var(name))
}

pub fn ssr_stream() -> StreamId {
    StreamId(ns("ssr"))
}

pub fn fov_entry() -> Rule {
    let det = q(v("Dt"), ns("det"), v("B"));
    Rule {
        id: ssr("rule_w_1"),
        kind: RuleKind::Soft,
        head: vec![mention(q(v("O"), ns("enters"), c(ssr("FoV"))), "T")],
        body: BodySpec {
            positive: vec![StreamBlock {
                stream: ssr_stream(),
                window: WindowSpec::Now,
                timestamp: None,
                patterns: vec![
                    mention(det.clone(), "T"),
                    t(PatternTerm::Quoted(Box::new(det)), ns("score"), v("S")),
                    t(v("B"), sosa("isSampleOf"), v("O")),
                    t(v("B"), rdf_type(), c(ns("car"))),
                ],
                filters: vec![gt(fv("S"), dec("0.8"))],
            }],
            naf: vec![StreamBlock {
                stream: ssr_stream(),
                window: WindowSpec::Range(5),
                timestamp: None,
                patterns: vec![t(v("O"), ns("inFOV"), c(ssr("FoV")))],
                filters: vec![],
            }],
            filters: vec![],
            static_patterns: vec![],
        },
    }
}

pub fn iou_association() -> Rule {
    let det = q(v("Dt"), ns("det"), v("B2"));
    Rule {
        id: ssr("rule_w_2"),
        kind: RuleKind::Soft,
        head: vec![t(v("B1"), sosa("isSampleOf"), v("O"))],
        body: BodySpec {
            positive: vec![StreamBlock {
                stream: ssr_stream(),
                window: WindowSpec::Now,
                timestamp: None,
                patterns: vec![
                    mention(det.clone(), "T"),
                    t(PatternTerm::Quoted(Box::new(det)), ns("score"), v("S")),
                    mention(q(v("Trk"), ns("trk"), v("B1")), "T"),
                    t(v("Trk"), ns("trklet"), v("O")),
                ],
                filters: vec![FilterExpr::binary(
                    BinOp::And,
                    gt(fv("S"), dec("0.8")),
                    gt(FilterExpr::Call(Builtin::Iou, vec![fv("B1"), fv("B2")]), dec("0.8")),
                )],
            }],
            ..BodySpec::default()
        },
    }
}

pub fn reidentification() -> Rule {
    let horizon = FilterExpr::binary(
        BinOp::Lt,
        fv("T"),
        FilterExpr::binary(BinOp::Add, fv("Te"), FilterExpr::Const(Literal::integer(3).into())),
    );
    Rule {
        id: ssr("rule_w_3"),
        kind: RuleKind::Soft,
        head: vec![t(v("B1"), sosa("isSampleOf"), v("O"))],
        body: BodySpec {
            positive: vec![
                StreamBlock {
                    stream: ssr_stream(),
                    window: WindowSpec::Range(5),
                    timestamp: Some(var("Te")),
                    patterns: vec![t(v("Trk2"), ns("trk"), v("B2"))],
                    filters: vec![],
                },
                StreamBlock {
                    stream: ssr_stream(),
                    window: WindowSpec::Now,
                    timestamp: None,
                    patterns: vec![
                        mention(q(v("Trk1"), ns("trk"), v("B1")), "T"),
                        t(
                            PatternTerm::Quoted(Box::new(q(v("B1"), ns("vMatch"), v("B2")))),
                            ns("score"),
                            v("S"),
                        ),
                        t(v("B2"), sosa("isSampleOf"), v("O")),
                        t(v("Trk2"), ns("ends"), v("Te")),
                    ],
                    filters: vec![FilterExpr::binary(BinOp::And, horizon, gt(fv("S"), dec("0.8")))],
                },
            ],
            ..BodySpec::default()
        },
    }
}
