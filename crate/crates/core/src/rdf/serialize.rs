use super::fact::TimestampedFact;
use super::term::{Datatype, Iri, Literal, Term};
use super::vocab::{self, PrefixMap};

/// One-line Turtle-star statement carrying the fact's timestamp as
/// `sosa:resultTime`. Uses the standard prelude for compaction.
pub fn serialize_fact(fact: &TimestampedFact) -> String {
    serialize_fact_with(fact, &PrefixMap::prelude())
}

pub fn serialize_fact_with(fact: &TimestampedFact, prefixes: &PrefixMap) -> String {
    let mut out = String::new();
    write_term(&mut out, fact.subject(), prefixes);
    out.push(' ');
    write_predicate(&mut out, fact.predicate(), prefixes);
    out.push(' ');
    write_term(&mut out, fact.object(), prefixes);
    out.push_str("; ");
    write_iri(&mut out, &Iri::new(vocab::SOSA_RESULT_TIME), prefixes);
    out.push(' ');
    out.push_str(&fact.timestamp().to_string());
    out.push('.');
    out
}

pub fn serialize_term(term: &Term, prefixes: &PrefixMap) -> String {
    let mut out = String::new();
    write_term(&mut out, term, prefixes);
    out
}

pub fn serialize_iri(iri: &Iri, prefixes: &PrefixMap) -> String {
    let mut out = String::new();
    write_iri(&mut out, iri, prefixes);
    out
}

fn write_predicate(out: &mut String, iri: &Iri, prefixes: &PrefixMap) {
    if iri.as_str() == vocab::RDF_TYPE {
        out.push('a');
    } else {
        write_iri(out, iri, prefixes);
    }
}

fn write_iri(out: &mut String, iri: &Iri, prefixes: &PrefixMap) {
    match prefixes.compact(iri) {
        Some(short) => out.push_str(&short),
        None => {
            out.push('<');
            out.push_str(iri.as_str());
            out.push('>');
        }
    }
}

fn write_term(out: &mut String, term: &Term, prefixes: &PrefixMap) {
    match term {
        Term::Iri(iri) => write_iri(out, iri, prefixes),
        Term::BlankNode(label) => {
            out.push_str("_:");
            out.push_str(label);
        }
        Term::Literal(lit) => write_literal(out, lit),
        Term::Quoted(t) => {
            out.push_str("<<");
            write_term(out, &t.subject, prefixes);
            out.push(' ');
            write_predicate(out, &t.predicate, prefixes);
            out.push(' ');
            write_term(out, &t.object, prefixes);
            out.push_str(">>");
        }
    }
}

fn write_literal(out: &mut String, lit: &Literal) {
    match lit.datatype() {
        Datatype::Integer | Datatype::Decimal => out.push_str(lit.lexical()),
        Datatype::String => {
            out.push('\'');
            for c in lit.lexical().chars() {
                match c {
                    '\'' => out.push_str("\\'"),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\r' => out.push_str("\\r"),
                    '\t' => out.push_str("\\t"),
                    c => out.push(c),
                }
            }
            out.push('\'');
        }
    }
}
