//! Namespace constants and the standard prefix prelude.

use std::collections::BTreeMap;

use super::term::Iri;

pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub const SOSA: &str = "http://www.w3.org/ns/sosa/";
pub const SH: &str = "http://www.w3.org/ns/shacl#";
pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
pub const SSR: &str = "http://cqels.org/ssr#";
pub const DEFAULT_NS: &str = "http://cqels.org/ns#";
/// Intermediate streams and predicates of federated plans.
pub const FED: &str = "http://cqels.org/fed#";

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
pub const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
pub const XSD_DECIMAL: &str = "http://www.w3.org/2001/XMLSchema#decimal";
pub const SOSA_RESULT_TIME: &str = "http://www.w3.org/ns/sosa/resultTime";

/// The prefix prelude shipped with the engine, in Turtle form.
pub const PRELUDE_TTL: &str = include_str!("../../prelude.ttl");

pub fn rdf_type() -> Iri {
    Iri::new(RDF_TYPE)
}

pub fn sosa(local: &str) -> Iri {
    Iri::new(format!("{SOSA}{local}"))
}

pub fn ssr(local: &str) -> Iri {
    Iri::new(format!("{SSR}{local}"))
}

pub fn fed(local: &str) -> Iri {
    Iri::new(format!("{FED}{local}"))
}

/// IRI in the default (`:`) namespace.
pub fn ns(local: &str) -> Iri {
    Iri::new(format!("{DEFAULT_NS}{local}"))
}

/// Prefix declarations in scope for a document.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrefixMap {
    prefixes: BTreeMap<String, String>,
}

impl PrefixMap {
    pub fn empty() -> Self {
        PrefixMap {
            prefixes: BTreeMap::new(),
        }
    }

    /// `rdf:`, `sosa:`, `sh:`, `xsd:`, `ssr:`, `fed:` and the default `:`
    /// namespace.
    pub fn prelude() -> Self {
        let mut map = Self::empty();
        map.insert("rdf", RDF);
        map.insert("sosa", SOSA);
        map.insert("sh", SH);
        map.insert("xsd", XSD);
        map.insert("ssr", SSR);
        map.insert("fed", FED);
        map.insert("", DEFAULT_NS);
        map
    }

    pub fn insert(&mut self, prefix: impl Into<String>, namespace: impl Into<String>) {
        self.prefixes.insert(prefix.into(), namespace.into());
    }

    pub fn get(&self, prefix: &str) -> Option<&str> {
        self.prefixes.get(prefix).map(String::as_str)
    }

    pub fn expand(&self, prefix: &str, local: &str) -> Option<Iri> {
        self.get(prefix).map(|ns| Iri::new(format!("{ns}{local}")))
    }

    /// Shortest prefixed form of `iri`, if some namespace matches and the
    /// remainder is a safe local name.
    pub fn compact(&self, iri: &Iri) -> Option<String> {
        let text = iri.as_str();
        self.prefixes
            .iter()
            .filter_map(|(prefix, ns)| {
                let local = text.strip_prefix(ns.as_str())?;
                is_safe_local(local).then(|| format!("{prefix}:{local}"))
            })
            .min_by_key(|s| s.len())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.prefixes.iter().map(|(p, n)| (p.as_str(), n.as_str()))
    }
}

impl Default for PrefixMap {
    fn default() -> Self {
        Self::prelude()
    }
}

fn is_safe_local(local: &str) -> bool {
    let mut chars = local.chars();
    match chars.next() {
        None => true,
        Some(c) if c.is_ascii_alphanumeric() || c == '_' => {
            chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        }
        Some(_) => false,
    }
}
