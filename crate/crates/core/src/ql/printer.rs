//! Normal-form printer. The output re-parses to a structurally equal rule.

use std::fmt::Write;

use super::ast::*;
use crate::rdf::{serialize_iri, vocab, Datatype, Literal, PrefixMap, Term};

/// Prints a rule as a complete SHACL wrapper using the standard prelude and
/// one-second ticks.
pub fn pretty_print(rule: &Rule) -> String {
    pretty_print_with(rule, &PrefixMap::prelude(), 1.0)
}

pub fn pretty_print_with(rule: &Rule, prefixes: &PrefixMap, tick_seconds: f64) -> String {
    let query = print_query(rule, prefixes, tick_seconds);
    let mut out = String::new();
    let _ = writeln!(out, "{} a sh:NodeShape ;", serialize_iri(&rule.id, prefixes));
    out.push_str("sh:rule [\n  a sh:CQELSRule ;\n  sh:construct \"\"\"\n");
    out.push_str(&escape_long(&query));
    out.push_str("  \"\"\" ;\n] .\n");
    out
}

/// The bare CONSTRUCT/WHERE query text.
pub fn print_query(rule: &Rule, prefixes: &PrefixMap, tick_seconds: f64) -> String {
    let mut out = String::new();
    out.push_str("  CONSTRUCT {\n");
    for p in &rule.head {
        let _ = writeln!(out, "    {} .", pattern(p, prefixes));
    }
    out.push_str("  }\n  WHERE {\n");
    for b in &rule.body.positive {
        block(&mut out, b, false, prefixes, tick_seconds);
    }
    for b in &rule.body.naf {
        block(&mut out, b, true, prefixes, tick_seconds);
    }
    for p in &rule.body.static_patterns {
        let _ = writeln!(out, "    {} .", pattern(p, prefixes));
    }
    for f in &rule.body.filters {
        let _ = writeln!(out, "    FILTER ({})", expr(f, prefixes));
    }
    out.push_str("  }\n");
    out
}

fn block(out: &mut String, b: &StreamBlock, naf: bool, prefixes: &PrefixMap, tick_seconds: f64) {
    out.push_str("    ");
    if naf {
        out.push_str("NAF ");
    }
    let _ = write!(out, "STREAM <{}>", stream_ref(b.stream.iri(), prefixes));
    if let Some(t) = &b.timestamp {
        let _ = write!(out, " @{t}");
    }
    if let WindowSpec::Range(n) = b.window {
        let _ = write!(out, " window[{} sec]", seconds(n, tick_seconds));
    }
    out.push_str(" {\n");
    for p in &b.patterns {
        let _ = writeln!(out, "      {} .", pattern(p, prefixes));
    }
    for f in &b.filters {
        let _ = writeln!(out, "      FILTER ({})", expr(f, prefixes));
    }
    out.push_str("    }\n");
}

/// Stream names keep the angle-bracket form, compacted inside (`<:ssr>`).
fn stream_ref(iri: &crate::rdf::Iri, prefixes: &PrefixMap) -> String {
    prefixes.compact(iri).unwrap_or_else(|| iri.as_str().to_string())
}

fn seconds(ticks: u64, tick_seconds: f64) -> String {
    let s = ticks as f64 * tick_seconds;
    if s.fract() == 0.0 {
        format!("{}", s as u64)
    } else {
        format!("{s}")
    }
}

/// One pattern in query syntax, without the terminating `.`.
pub fn print_pattern(p: &TriplePattern, prefixes: &PrefixMap) -> String {
    pattern(p, prefixes)
}

/// A filter expression in query syntax.
pub fn print_expr(e: &FilterExpr, prefixes: &PrefixMap) -> String {
    expr(e, prefixes)
}

fn pattern(p: &TriplePattern, prefixes: &PrefixMap) -> String {
    match p {
        TriplePattern::Triple {
            subject,
            predicate,
            object,
            timestamp,
        } => {
            let mut s = format!(
                "{} {} {}",
                term(subject, prefixes),
                verb(predicate, prefixes),
                term(object, prefixes)
            );
            if let Some(t) = timestamp {
                let _ = write!(s, " @ {t}");
            }
            s
        }
        TriplePattern::Mention { quoted: q, timestamp } => {
            let mut s = quoted(q, prefixes);
            if let Some(t) = timestamp {
                let _ = write!(s, " @ {t}");
            }
            s
        }
    }
}

fn quoted(q: &QuotedPattern, prefixes: &PrefixMap) -> String {
    format!(
        "<< {} {} {} >>",
        term(&q.subject, prefixes),
        verb(&q.predicate, prefixes),
        term(&q.object, prefixes)
    )
}

fn verb(t: &PatternTerm, prefixes: &PrefixMap) -> String {
    match t {
        PatternTerm::Const(Term::Iri(i)) if i.as_str() == vocab::RDF_TYPE => "a".to_string(),
        other => term(other, prefixes),
    }
}

fn term(t: &PatternTerm, prefixes: &PrefixMap) -> String {
    match t {
        PatternTerm::Var(v) => v.to_string(),
        PatternTerm::Const(c) => constant(c, prefixes),
        PatternTerm::Quoted(q) => quoted(q, prefixes),
    }
}

fn constant(c: &Term, prefixes: &PrefixMap) -> String {
    match c {
        Term::Iri(i) => serialize_iri(i, prefixes),
        Term::BlankNode(l) => format!("_:{l}"),
        Term::Literal(l) => literal(l),
        Term::Quoted(t) => format!(
            "<< {} {} {} >>",
            constant(&t.subject, prefixes),
            constant(&Term::Iri(t.predicate.clone()), prefixes),
            constant(&t.object, prefixes)
        ),
    }
}

fn literal(l: &Literal) -> String {
    match l.datatype() {
        Datatype::Integer | Datatype::Decimal => l.lexical().to_string(),
        Datatype::String => {
            let mut s = String::from("\"");
            for c in l.lexical().chars() {
                match c {
                    '"' => s.push_str("\\\""),
                    '\\' => s.push_str("\\\\"),
                    '\n' => s.push_str("\\n"),
                    '\r' => s.push_str("\\r"),
                    '\t' => s.push_str("\\t"),
                    c => s.push(c),
                }
            }
            s.push('"');
            s
        }
    }
}

fn expr(e: &FilterExpr, prefixes: &PrefixMap) -> String {
    match e {
        FilterExpr::Var(v) => v.to_string(),
        FilterExpr::Const(c) => constant(c, prefixes),
        FilterExpr::Call(b, args) => {
            let args: Vec<String> = args.iter().map(|a| expr(a, prefixes)).collect();
            format!("{}({})", b.name(), args.join(", "))
        }
        FilterExpr::Binary(op, l, r) => {
            let prec = op.precedence();
            let left = operand(l, prefixes, |p| p < prec || (p == prec && op.is_comparison()));
            let right = operand(r, prefixes, |p| p <= prec);
            format!("{left} {} {right}", op.symbol())
        }
    }
}

fn operand(e: &FilterExpr, prefixes: &PrefixMap, needs_parens: impl Fn(u8) -> bool) -> String {
    let text = expr(e, prefixes);
    match e {
        FilterExpr::Binary(op, ..) if needs_parens(op.precedence()) => format!("({text})"),
        _ => text,
    }
}

/// Escapes query text for a `"""` long string.
fn escape_long(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
