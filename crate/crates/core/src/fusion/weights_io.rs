use thiserror::Error;

use super::select::RuleWeights;
use crate::rdf::{Iri, PrefixMap};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("weights line {line}: {message}")]
pub struct WeightsError {
    pub line: usize,
    pub message: String,
}

/// Resolves `<iri>`, `prefix:local` (via `prefixes`) or a bare absolute IRI.
pub fn parse_iri_token(token: &str, prefixes: &PrefixMap) -> Option<Iri> {
    if let Some(inner) = token.strip_prefix('<').and_then(|t| t.strip_suffix('>')) {
        return Some(Iri::new(inner));
    }
    if token.contains("://") {
        return Some(Iri::new(token));
    }
    let (p, l) = token.split_once(':')?;
    prefixes.expand(p, l)
}

/// Reads `rule_iri<TAB>weight` lines. Blank lines and `#` comments are
/// skipped.
pub fn parse_weights(text: &str, prefixes: &PrefixMap) -> Result<RuleWeights, WeightsError> {
    let mut w = RuleWeights::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| WeightsError { line: n + 1, message };
        let (iri, value) = line
            .split_once('\t')
            .ok_or_else(|| err("expected rule_iri<TAB>weight".into()))?;
        let iri = parse_iri_token(iri.trim(), prefixes).ok_or_else(|| err(format!("bad rule IRI {iri:?}")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| err(format!("bad weight {value:?}")))?;
        if !value.is_finite() || value < 0.0 {
            return Err(err(format!("weight must be finite and >= 0, got {value}")));
        }
        w.set(iri, value);
    }
    Ok(w)
}

/// One `rule_iri<TAB>weight` line per rule, sorted by IRI.
pub fn write_weights(w: &RuleWeights) -> String {
    w.iter().map(|(r, v)| format!("{}\t{v}\n", r.as_str())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::vocab::ssr;

    #[test]
    fn round_trip() {
        let mut w = RuleWeights::new();
        w.set(ssr("rule_w_2"), 1.5);
        w.set(ssr("rule_w_3"), 0.25);
        let text = write_weights(&w);
        assert_eq!(parse_weights(&text, &PrefixMap::prelude()).unwrap(), w);
    }

    #[test]
    fn accepts_prefixed_and_bracketed_names() {
        let w = parse_weights("# learned\nssr:rule_w_2\t2\n<http://cqels.org/ssr#rule_w_3>\t0.5\n", &PrefixMap::prelude()).unwrap();
        assert_eq!(w.get(&ssr("rule_w_2")), 2.0);
        assert_eq!(w.get(&ssr("rule_w_3")), 0.5);
    }

    #[test]
    fn rejects_negative_and_malformed() {
        let p = PrefixMap::prelude();
        assert_eq!(parse_weights("ssr:a\t-1", &p).unwrap_err().line, 1);
        assert!(parse_weights("\nssr:a 1", &p).unwrap_err().message.contains("TAB"));
        assert!(parse_weights("nope:a\t1", &p).is_err());
    }
}
