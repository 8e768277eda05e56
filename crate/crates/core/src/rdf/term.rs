use std::fmt;
use std::sync::Arc;

use super::vocab;

/// An absolute IRI. Prefixed names are expanded before an `Iri` is built.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Iri(Arc<str>);

impl Iri {
    /// Panics on an empty string; IRIs coming from parsers are never empty.
    pub fn new(iri: impl AsRef<str>) -> Self {
        let iri = iri.as_ref();
        assert!(!iri.is_empty(), "IRI text must be non-empty");
        Iri(Arc::from(iri))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Datatype {
    String,
    Integer,
    Decimal,
}

impl Datatype {
    pub fn iri(self) -> Iri {
        Iri::new(match self {
            Datatype::String => vocab::XSD_STRING,
            Datatype::Integer => vocab::XSD_INTEGER,
            Datatype::Decimal => vocab::XSD_DECIMAL,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    lexical: Arc<str>,
    datatype: Datatype,
}

impl Literal {
    pub fn string(value: impl AsRef<str>) -> Self {
        Literal {
            lexical: Arc::from(value.as_ref()),
            datatype: Datatype::String,
        }
    }

    pub fn integer(value: i64) -> Self {
        Literal {
            lexical: Arc::from(value.to_string()),
            datatype: Datatype::Integer,
        }
    }

    /// Canonical decimal form of a finite float: shortest round-trip digits,
    /// always containing a `.`.
    pub fn decimal(value: f64) -> Self {
        assert!(value.is_finite(), "decimal literal must be finite");
        let mut text = format!("{value}");
        if !text.contains('.') {
            text.push_str(".0");
        }
        Literal {
            lexical: Arc::from(text),
            datatype: Datatype::Decimal,
        }
    }

    /// Builds a typed literal from its lexical form, validating numeric lexemes.
    pub fn typed(lexical: impl AsRef<str>, datatype: Datatype) -> Option<Self> {
        let lexical = lexical.as_ref();
        let ok = match datatype {
            Datatype::String => true,
            Datatype::Integer => is_integer_lexeme(lexical),
            Datatype::Decimal => is_decimal_lexeme(lexical),
        };
        ok.then(|| Literal {
            lexical: Arc::from(lexical),
            datatype,
        })
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn datatype(&self) -> Datatype {
        self.datatype
    }

    /// Numeric value for filters. String literals whose lexical form reads as an
    /// integer or decimal are coerced (`'0.8'` compares as 0.8).
    pub fn numeric_value(&self) -> Option<f64> {
        match self.datatype {
            Datatype::Integer | Datatype::Decimal => self.lexical.parse().ok(),
            Datatype::String => {
                let text = self.lexical.trim();
                if is_integer_lexeme(text) || is_decimal_lexeme(text) {
                    text.parse().ok()
                } else {
                    None
                }
            }
        }
    }

    pub fn as_integer(&self) -> Option<i64> {
        match self.datatype {
            Datatype::Integer => self.lexical.parse().ok(),
            _ => None,
        }
    }
}

pub(crate) fn is_integer_lexeme(text: &str) -> bool {
    let digits = text.strip_prefix(['+', '-']).unwrap_or(text);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

pub(crate) fn is_decimal_lexeme(text: &str) -> bool {
    let body = text.strip_prefix(['+', '-']).unwrap_or(text);
    match body.split_once('.') {
        Some((int, frac)) => {
            int.bytes().all(|b| b.is_ascii_digit())
                && !frac.is_empty()
                && frac.bytes().all(|b| b.is_ascii_digit())
        }
        None => false,
    }
}

/// A subject-predicate-object triple. Used both for asserted facts and for
/// quoted (RDF-star) triples appearing as terms.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Iri,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: impl Into<Term>, predicate: Iri, object: impl Into<Term>) -> Self {
        Triple {
            subject: subject.into(),
            predicate,
            object: object.into(),
        }
    }

    /// Quoting depth of the deepest quoted triple inside this triple's terms.
    pub fn nesting_depth(&self) -> usize {
        self.subject.nesting_depth().max(self.object.nesting_depth())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(Iri),
    BlankNode(Arc<str>),
    Literal(Literal),
    Quoted(Arc<Triple>),
}

impl Term {
    pub fn iri(iri: impl AsRef<str>) -> Self {
        Term::Iri(Iri::new(iri))
    }

    pub fn blank(label: impl AsRef<str>) -> Self {
        Term::BlankNode(Arc::from(label.as_ref()))
    }

    pub fn quoted(subject: impl Into<Term>, predicate: Iri, object: impl Into<Term>) -> Self {
        Term::Quoted(Arc::new(Triple::new(subject, predicate, object)))
    }

    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(iri) => Some(iri),
            _ => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(lit) => Some(lit),
            _ => None,
        }
    }

    pub fn as_quoted(&self) -> Option<&Triple> {
        match self {
            Term::Quoted(t) => Some(t),
            _ => None,
        }
    }

    pub fn numeric_value(&self) -> Option<f64> {
        self.as_literal().and_then(Literal::numeric_value)
    }

    pub fn nesting_depth(&self) -> usize {
        match self {
            Term::Quoted(t) => 1 + t.nesting_depth(),
            _ => 0,
        }
    }
}

impl From<Iri> for Term {
    fn from(iri: Iri) -> Self {
        Term::Iri(iri)
    }
}

impl From<Literal> for Term {
    fn from(lit: Literal) -> Self {
        Term::Literal(lit)
    }
}

impl From<Triple> for Term {
    fn from(t: Triple) -> Self {
        Term::Quoted(Arc::new(t))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(iri) => write!(f, "{iri}"),
            Term::BlankNode(label) => write!(f, "_:{label}"),
            Term::Literal(lit) => match lit.datatype {
                Datatype::String => write!(f, "{:?}", lit.lexical()),
                _ => f.write_str(lit.lexical()),
            },
            Term::Quoted(t) => write!(f, "<< {} {} {} >>", t.subject, t.predicate, t.object),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoted_equality_recurses() {
        let p = Iri::new("http://e/p");
        let a = Term::quoted(Term::iri("http://e/a"), p.clone(), Term::iri("http://e/b"));
        let b = Term::quoted(Term::iri("http://e/a"), p.clone(), Term::iri("http://e/b"));
        let c = Term::quoted(Term::iri("http://e/a"), p, Term::iri("http://e/c"));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn string_literals_coerce_to_numbers() {
        assert_eq!(Literal::string("0.8").numeric_value(), Some(0.8));
        assert_eq!(Literal::string("12").numeric_value(), Some(12.0));
        assert_eq!(Literal::string("car").numeric_value(), None);
        assert_eq!(Literal::string("1e5").numeric_value(), None);
    }

    #[test]
    fn decimal_canonical_form() {
        assert_eq!(Literal::decimal(3.0).lexical(), "3.0");
        assert_eq!(Literal::decimal(-0.25).lexical(), "-0.25");
        assert!(Literal::typed("1.", Datatype::Decimal).is_none());
        assert!(Literal::typed("-7", Datatype::Integer).is_some());
    }

    #[test]
    #[should_panic]
    fn empty_iri_rejected() {
        let _ = Iri::new("");
    }
}
