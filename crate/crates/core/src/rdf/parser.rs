//! Turtle-star subset parser for fact documents.
//!
//! A document is a sequence of `@prefix` directives and statement groups. Each
//! group is one subject followed by a `;`-separated predicate list and a `.`
//! terminator. A `sosa:resultTime N` entry in a group is not a fact: it sets
//! the timestamp of every fact in that group.

use super::error::{ParseError, SyntaxError};
use super::fact::{Tick, TimestampedFact};
use super::lexer::{tokenize, Pos, Spanned, Tok};
use super::term::{Datatype, Iri, Literal, Term, Triple};
use super::vocab::{self, PrefixMap};

/// Quoted triples may nest at most this deep (`<< << s p o >> p o >>`).
pub const MAX_QUOTE_DEPTH: usize = 2;

/// Shared token cursor for the fact parser and the rule-wrapper parser.
pub(crate) struct Cursor<'t> {
    toks: &'t [Spanned],
    idx: usize,
    pub(crate) prefixes: PrefixMap,
}

impl<'t> Cursor<'t> {
    pub(crate) fn new(toks: &'t [Spanned], prefixes: PrefixMap) -> Self {
        Cursor {
            toks,
            idx: 0,
            prefixes,
        }
    }

    pub(crate) fn peek(&self) -> Option<&'t Tok> {
        self.toks.get(self.idx).map(|t| &t.tok)
    }

    pub(crate) fn peek_nth(&self, n: usize) -> Option<&'t Tok> {
        self.toks.get(self.idx + n).map(|t| &t.tok)
    }

    pub(crate) fn at_end(&self) -> bool {
        self.idx >= self.toks.len()
    }

    pub(crate) fn pos(&self) -> Pos {
        match self.toks.get(self.idx) {
            Some(t) => t.pos,
            None => self.toks.last().map(|t| t.pos).unwrap_or(Pos { line: 1, column: 1 }),
        }
    }

    pub(crate) fn next(&mut self) -> Option<&'t Tok> {
        let t = self.toks.get(self.idx).map(|t| &t.tok);
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    pub(crate) fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.idx += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn error(&self, message: impl Into<String>) -> ParseError {
        let pos = self.pos();
        SyntaxError::new(pos.line, pos.column, message).into()
    }

    pub(crate) fn expect(&mut self, tok: &Tok, what: &str) -> Result<(), ParseError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.error(format!("expected {what}, found {}", describe(self.peek()))))
        }
    }

    /// `@prefix p: <ns> .`; the directive token has already been seen.
    pub(crate) fn prefix_directive(&mut self) -> Result<(), ParseError> {
        self.expect(&Tok::PrefixDirective, "'@prefix'")?;
        let prefix = match self.next() {
            Some(Tok::PName { prefix, local }) if local.is_empty() => prefix.clone(),
            other => return Err(self.error(format!("expected prefix name, found {}", describe(other)))),
        };
        let ns = match self.next() {
            Some(Tok::IriRef(ns)) => ns.clone(),
            other => return Err(self.error(format!("expected namespace IRI, found {}", describe(other)))),
        };
        self.expect(&Tok::Dot, "'.' after prefix declaration")?;
        self.prefixes.insert(prefix, ns);
        Ok(())
    }

    pub(crate) fn resolve_pname(&self, prefix: &str, local: &str) -> Result<Iri, ParseError> {
        self.prefixes.expand(prefix, local).ok_or_else(|| {
            let pos = self.pos();
            ParseError::UnknownPrefix {
                prefix: prefix.to_string(),
                line: pos.line,
                column: pos.column,
            }
        })
    }

    /// Angle-bracketed IRIs whose content reads as `prefix:local` with a
    /// declared prefix are expanded (`<ssr:FoV>`, `<:ssr>`).
    pub(crate) fn resolve_iri_ref(&self, content: &str) -> Iri {
        resolve_iri_ref(&self.prefixes, content)
    }

    pub(crate) fn iri(&mut self) -> Result<Iri, ParseError> {
        let pos_idx = self.idx;
        match self.next() {
            Some(Tok::IriRef(content)) => Ok(self.resolve_iri_ref(content)),
            Some(Tok::PName { prefix, local }) => {
                self.idx = pos_idx;
                let iri = self.resolve_pname(prefix, local)?;
                self.idx += 1;
                Ok(iri)
            }
            other => {
                self.idx = pos_idx;
                Err(self.error(format!("expected IRI, found {}", describe(other))))
            }
        }
    }

    pub(crate) fn verb(&mut self) -> Result<Iri, ParseError> {
        if self.eat(&Tok::A) {
            Ok(vocab::rdf_type())
        } else {
            self.iri()
        }
    }

    /// Any RDF-star term. `depth` is the quoting depth of the enclosing context.
    pub(crate) fn term(&mut self, depth: usize, allow_literal: bool) -> Result<Term, ParseError> {
        match self.peek() {
            Some(Tok::LtLt) => {
                if depth >= MAX_QUOTE_DEPTH {
                    let pos = self.pos();
                    return Err(ParseError::NestingTooDeep {
                        line: pos.line,
                        column: pos.column,
                    });
                }
                self.next();
                let s = self.term(depth + 1, false)?;
                let p = self.verb()?;
                let o = self.term(depth + 1, true)?;
                self.expect(&Tok::GtGt, "'>>'")?;
                Ok(Term::Quoted(std::sync::Arc::new(Triple::new(s, p, o))))
            }
            Some(Tok::Blank(label)) => {
                self.next();
                Ok(Term::blank(label))
            }
            Some(Tok::Str(s)) if allow_literal => {
                self.next();
                Ok(Literal::string(s).into())
            }
            Some(Tok::Integer(s)) if allow_literal => {
                self.next();
                Ok(Literal::typed(s, Datatype::Integer)
                    .ok_or_else(|| self.error(format!("bad integer '{s}'")))?
                    .into())
            }
            Some(Tok::Decimal(s)) if allow_literal => {
                self.next();
                Ok(Literal::typed(s, Datatype::Decimal)
                    .ok_or_else(|| self.error(format!("bad decimal '{s}'")))?
                    .into())
            }
            Some(Tok::IriRef(_)) | Some(Tok::PName { .. }) => Ok(Term::Iri(self.iri()?)),
            other => Err(self.error(format!("expected term, found {}", describe(other)))),
        }
    }
}

pub(crate) fn resolve_iri_ref(prefixes: &PrefixMap, content: &str) -> Iri {
    if let Some((prefix, local)) = content.split_once(':') {
        if !local.starts_with("//") {
            if let Some(iri) = prefixes.expand(prefix, local) {
                return iri;
            }
        }
    }
    Iri::new(content)
}

pub(crate) fn describe(tok: Option<&Tok>) -> String {
    match tok {
        None => "end of input".to_string(),
        Some(Tok::PrefixDirective) => "'@prefix'".to_string(),
        Some(Tok::IriRef(s)) => format!("<{s}>"),
        Some(Tok::PName { prefix, local }) => format!("'{prefix}:{local}'"),
        Some(Tok::Blank(l)) => format!("'_:{l}'"),
        Some(Tok::Str(s)) => format!("string {s:?}"),
        Some(Tok::Integer(s)) | Some(Tok::Decimal(s)) => format!("number {s}"),
        Some(Tok::A) => "'a'".to_string(),
        Some(Tok::LtLt) => "'<<'".to_string(),
        Some(Tok::GtGt) => "'>>'".to_string(),
        Some(Tok::Semi) => "';'".to_string(),
        Some(Tok::Comma) => "','".to_string(),
        Some(Tok::Dot) => "'.'".to_string(),
        Some(Tok::LBracket) => "'['".to_string(),
        Some(Tok::RBracket) => "']'".to_string(),
    }
}

/// Configurable fact-document parser.
#[derive(Clone, Debug, Default)]
pub struct FactParser {
    prefixes: PrefixMap,
    default_timestamp: Tick,
}

impl FactParser {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_prefixes(mut self, prefixes: PrefixMap) -> Self {
        self.prefixes = prefixes;
        self
    }

    /// Timestamp for groups without `sosa:resultTime` (the ingestion clock).
    pub fn with_default_timestamp(mut self, tick: Tick) -> Self {
        self.default_timestamp = tick;
        self
    }

    pub fn parse(&self, text: &str) -> Result<Vec<TimestampedFact>, ParseError> {
        let toks = tokenize(text)?;
        let mut cur = Cursor::new(&toks, self.prefixes.clone());
        let result_time = Iri::new(vocab::SOSA_RESULT_TIME);
        let mut facts = Vec::new();
        while !cur.at_end() {
            if cur.peek() == Some(&Tok::PrefixDirective) {
                cur.prefix_directive()?;
                continue;
            }
            let subject = cur.term(0, false)?;
            let mut pairs = Vec::new();
            let mut timestamp = None;
            loop {
                let verb = cur.verb()?;
                loop {
                    let object = cur.term(0, true)?;
                    if verb == result_time {
                        if timestamp.is_some() {
                            return Err(cur.error("duplicate sosa:resultTime in statement group"));
                        }
                        let tick = object
                            .as_literal()
                            .and_then(Literal::as_integer)
                            .and_then(|v| Tick::try_from(v).ok())
                            .ok_or_else(|| {
                                cur.error("sosa:resultTime must be a non-negative integer")
                            })?;
                        timestamp = Some(tick);
                    } else {
                        pairs.push((verb.clone(), object));
                    }
                    if !cur.eat(&Tok::Comma) {
                        break;
                    }
                }
                if !cur.eat(&Tok::Semi) {
                    break;
                }
                // Trailing `;` before the terminator is allowed.
                if cur.peek() == Some(&Tok::Dot) {
                    break;
                }
            }
            cur.expect(&Tok::Dot, "'.' at end of statement")?;
            let ts = timestamp.unwrap_or(self.default_timestamp);
            facts.extend(
                pairs
                    .into_iter()
                    .map(|(p, o)| TimestampedFact::new(Triple::new(subject.clone(), p, o), ts)),
            );
        }
        Ok(facts)
    }
}

/// Parses a fact document with the standard prelude and default timestamp 0.
pub fn parse_fact_document(text: &str) -> Result<Vec<TimestampedFact>, ParseError> {
    FactParser::new().parse(text)
}

/// Reads only `@prefix` directives; anything else is an error.
pub fn parse_prefix_document(text: &str) -> Result<PrefixMap, ParseError> {
    parse_prefix_document_with(text, &PrefixMap::empty())
}

/// Like [`parse_prefix_document`], adding to `base`.
pub fn parse_prefix_document_with(text: &str, base: &PrefixMap) -> Result<PrefixMap, ParseError> {
    let toks = tokenize(text)?;
    let mut cur = Cursor::new(&toks, base.clone());
    while !cur.at_end() {
        cur.prefix_directive()?;
    }
    Ok(cur.prefixes)
}
