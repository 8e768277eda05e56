use std::collections::BTreeSet;

use super::term::Triple;

/// Background knowledge: an untimed, duplicate-free set of triples.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StaticGraph {
    triples: BTreeSet<Triple>,
}

impl StaticGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns `true` if the triple was not already present.
    pub fn insert(&mut self, triple: Triple) -> bool {
        self.triples.insert(triple)
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.triples.contains(triple)
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }
}

impl FromIterator<Triple> for StaticGraph {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        StaticGraph {
            triples: iter.into_iter().collect(),
        }
    }
}

impl Extend<Triple> for StaticGraph {
    fn extend<I: IntoIterator<Item = Triple>>(&mut self, iter: I) {
        self.triples.extend(iter)
    }
}
