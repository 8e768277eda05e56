//! SHACL-style rule wrappers:
//!
//! ```text
//! ssr:rule_w_2 a sh:NodeShape ;
//! sh:rule [ a sh:CQELSRule ; sh:prefixes ssr: ; sh:construct """ CONSTRUCT ... """ ] ;
//! ```
//!
//! Each `sh:NodeShape` subject with an `sh:rule` node carrying an
//! `sh:construct` string yields one rule whose id is the shape IRI.

use super::analyze::{analyze_rule, Safety};
use super::ast::{Rule, RuleKind};
use super::error::RuleError;
use super::parser::{Origin, QueryParser};
use crate::rdf::lexer::{tokenize, Pos, Tok};
use crate::rdf::parser::{describe, Cursor};
use crate::rdf::{vocab, Iri, ParseError, PrefixMap, Term};

/// Default marker for soft rules: ids containing `_w_` carry a weight.
pub const DEFAULT_SOFT_RULE_PATTERN: &str = "_w_";

#[derive(Clone, Debug)]
pub struct RuleParser {
    prefixes: PrefixMap,
    tick_seconds: f64,
    soft_pattern: String,
}

impl Default for RuleParser {
    fn default() -> Self {
        RuleParser {
            prefixes: PrefixMap::prelude(),
            tick_seconds: 1.0,
            soft_pattern: DEFAULT_SOFT_RULE_PATTERN.to_string(),
        }
    }
}

#[derive(Debug)]
enum Object {
    Term(Term),
    Str(String, Pos),
    Node(Vec<(Iri, Object)>),
}

impl RuleParser {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_prefixes(mut self, prefixes: PrefixMap) -> Self {
        self.prefixes = prefixes;
        self
    }

    pub fn with_tick_seconds(mut self, tick_seconds: f64) -> Self {
        assert!(tick_seconds > 0.0, "tick_seconds must be positive");
        self.tick_seconds = tick_seconds;
        self
    }

    pub fn with_soft_pattern(mut self, pattern: impl Into<String>) -> Self {
        self.soft_pattern = pattern.into();
        self
    }

    pub fn tick_seconds(&self) -> f64 {
        self.tick_seconds
    }

    pub fn kind_for(&self, id: &Iri) -> RuleKind {
        if !self.soft_pattern.is_empty() && id.as_str().contains(&self.soft_pattern) {
            RuleKind::Soft
        } else {
            RuleKind::Hard
        }
    }

    /// Parses a rule document into rules in document order. Every rule is
    /// checked for head safety.
    pub fn parse(&self, text: &str) -> Result<Vec<Rule>, RuleError> {
        let toks = tokenize(text).map_err(ParseError::from)?;
        let mut cur = Cursor::new(&toks, self.prefixes.clone());
        let mut rules = Vec::new();
        while !cur.at_end() {
            if cur.peek() == Some(&Tok::PrefixDirective) {
                cur.prefix_directive()?;
                continue;
            }
            let subject = cur.term(0, false)?;
            let props = statement_body(&mut cur)?;
            if let Some(rule) = self.rule_from_shape(&subject, props, &cur.prefixes)? {
                rules.push(rule);
            }
        }
        Ok(rules)
    }

    /// Parses bare query text as a rule with the given id.
    pub fn parse_query(&self, id: Iri, query: &str) -> Result<Rule, RuleError> {
        self.build_rule(id, query, &self.prefixes, Origin::default())
    }

    fn build_rule(
        &self,
        id: Iri,
        query: &str,
        prefixes: &PrefixMap,
        origin: Origin,
    ) -> Result<Rule, RuleError> {
        let (head, body) = QueryParser::new(query, prefixes, self.tick_seconds, origin)?.query()?;
        let rule = Rule {
            kind: self.kind_for(&id),
            id,
            head,
            body,
        };
        if let Safety::Unsafe(variables) = analyze_rule(&rule).safety {
            return Err(RuleError::UnsafeHead {
                rule: rule.id,
                variables,
            });
        }
        Ok(rule)
    }

    fn rule_from_shape(
        &self,
        subject: &Term,
        props: Vec<(Iri, Object)>,
        prefixes: &PrefixMap,
    ) -> Result<Option<Rule>, RuleError> {
        let shape = Term::Iri(Iri::new(format!("{}NodeShape", vocab::SH)));
        let is_shape = props
            .iter()
            .any(|(p, o)| p.as_str() == vocab::RDF_TYPE && matches!(o, Object::Term(t) if *t == shape));
        if !is_shape {
            return Ok(None);
        }
        let id = match subject {
            Term::Iri(iri) => iri.clone(),
            other => {
                return Err(RuleError::Invalid {
                    rule: Iri::new("urn:anonymous"),
                    message: format!("rule shape subject must be an IRI, got {other}"),
                })
            }
        };
        let sh_rule = format!("{}rule", vocab::SH);
        let sh_construct = format!("{}construct", vocab::SH);
        let mut queries = Vec::new();
        for (p, o) in &props {
            if p.as_str() != sh_rule {
                continue;
            }
            if let Object::Node(inner) = o {
                for (ip, io) in inner {
                    if ip.as_str() == sh_construct {
                        match io {
                            Object::Str(q, pos) => queries.push((q.clone(), *pos)),
                            _ => {
                                return Err(RuleError::Invalid {
                                    rule: id,
                                    message: "sh:construct must be a string".into(),
                                })
                            }
                        }
                    }
                }
            }
        }
        match queries.len() {
            0 => Err(RuleError::Invalid {
                rule: id,
                message: "shape has no sh:rule with sh:construct".into(),
            }),
            1 => {
                let (query, pos) = queries.pop().unwrap();
                // The string token starts at `pos`; skip its opening quotes.
                let origin = Origin {
                    line: pos.line,
                    column: pos.column + 3,
                };
                self.build_rule(id, &query, prefixes, origin).map(Some)
            }
            _ => Err(RuleError::Invalid {
                rule: id,
                message: "shape has more than one sh:construct".into(),
            }),
        }
    }
}

/// Predicate-object list up to the end of the statement. A statement ends at
/// `.`, at end of input, or at a `;` followed by a new `subject a ...` group.
fn statement_body(cur: &mut Cursor<'_>) -> Result<Vec<(Iri, Object)>, RuleError> {
    let mut props = Vec::new();
    loop {
        let verb = cur.verb()?;
        loop {
            props.push((verb.clone(), object(cur)?));
            if !cur.eat(&Tok::Comma) {
                break;
            }
        }
        if cur.eat(&Tok::Dot) || cur.at_end() {
            return Ok(props);
        }
        if !cur.eat(&Tok::Semi) {
            return Err(cur
                .error(format!("expected ';' or '.', found {}", describe(cur.peek())))
                .into());
        }
        if cur.eat(&Tok::Dot) || cur.at_end() || starts_new_statement(cur) {
            return Ok(props);
        }
    }
}

fn starts_new_statement(cur: &Cursor<'_>) -> bool {
    cur.peek() == Some(&Tok::PrefixDirective) || cur.lookahead_is_subject_with_type()
}

fn object(cur: &mut Cursor<'_>) -> Result<Object, RuleError> {
    match cur.peek() {
        Some(Tok::LBracket) => {
            cur.next();
            let mut inner = Vec::new();
            if cur.eat(&Tok::RBracket) {
                return Ok(Object::Node(inner));
            }
            loop {
                let verb = cur.verb()?;
                inner.push((verb, object(cur)?));
                if cur.eat(&Tok::Semi) {
                    if cur.eat(&Tok::RBracket) {
                        break;
                    }
                    continue;
                }
                cur.expect(&Tok::RBracket, "']'")?;
                break;
            }
            Ok(Object::Node(inner))
        }
        Some(Tok::Str(s)) => {
            let pos = cur.pos();
            let s = s.clone();
            cur.next();
            Ok(Object::Str(s, pos))
        }
        _ => Ok(Object::Term(cur.term(0, true)?)),
    }
}

pub fn parse_rule_document(text: &str) -> Result<Vec<Rule>, RuleError> {
    RuleParser::new().parse(text)
}

impl Cursor<'_> {
    /// `IRI a ...` ahead: `a` can never be an object, so this is a new subject.
    pub(crate) fn lookahead_is_subject_with_type(&self) -> bool {
        matches!(self.peek(), Some(Tok::IriRef(_)) | Some(Tok::PName { .. }))
            && self.peek_nth(1) == Some(&Tok::A)
    }
}
