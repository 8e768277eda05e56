use std::collections::{BTreeMap, BTreeSet};

use super::binding::{match_fact, Binding};
use crate::ql::{StreamBlock, WindowSpec};
use crate::rdf::{StreamId, Tick, TimestampedFact};

/// Live facts of one stream as seen through one window.
#[derive(Clone, Debug)]
pub struct WindowState {
    stream: StreamId,
    spec: WindowSpec,
    facts: BTreeMap<Tick, Vec<TimestampedFact>>,
    low_watermark: Tick,
    now: Tick,
}

impl WindowState {
    pub fn new(stream: StreamId, spec: WindowSpec) -> Self {
        WindowState {
            stream,
            spec,
            facts: BTreeMap::new(),
            low_watermark: 0,
            now: 0,
        }
    }

    pub fn stream(&self) -> &StreamId {
        &self.stream
    }

    pub fn spec(&self) -> WindowSpec {
        self.spec
    }

    /// Oldest timestamp that can still be visible.
    pub fn low_watermark(&self) -> Tick {
        self.low_watermark
    }

    /// Stores a fact. Facts older than the watermark are dropped (returns
    /// false).
    pub fn insert(&mut self, fact: TimestampedFact) -> bool {
        if fact.timestamp() < self.low_watermark {
            return false;
        }
        self.facts.entry(fact.timestamp()).or_default().push(fact);
        true
    }

    /// Moves the window to `now` and evicts facts that can no longer be
    /// visible. Returns the evicted timestamps.
    pub fn advance(&mut self, now: Tick) -> Vec<Tick> {
        self.now = self.now.max(now);
        let wm = watermark(self.spec, self.now).max(self.low_watermark);
        self.low_watermark = wm;
        let keep = self.facts.split_off(&wm);
        let gone = std::mem::replace(&mut self.facts, keep);
        gone.into_keys().collect()
    }

    pub fn now(&self) -> Tick {
        self.now
    }

    /// Facts visible at the current tick, in timestamp then arrival order.
    pub fn contents(&self) -> impl Iterator<Item = &TimestampedFact> {
        let (spec, now) = (self.spec, self.now);
        self.facts
            .range(self.low_watermark..=now)
            .flat_map(|(_, fs)| fs.iter())
            .filter(move |f| spec.contains(now, f.timestamp()))
    }

    /// Number of buffered facts, including any stamped after `now`.
    pub fn buffered(&self) -> usize {
        self.facts.values().map(Vec::len).sum()
    }
}

fn watermark(spec: WindowSpec, now: Tick) -> Tick {
    match spec {
        WindowSpec::Now => now,
        WindowSpec::Range(n) => (now + 1).saturating_sub(n),
    }
}

/// Match rows of one pattern, keyed by the timestamp of the fact that
/// produced them.
#[derive(Clone, Debug, Default)]
pub(crate) struct PatternTable {
    rows: BTreeMap<Tick, BTreeSet<Binding>>,
}

impl PatternTable {
    pub(crate) fn visible(&self, spec: WindowSpec, low: Tick, now: Tick) -> impl Iterator<Item = &Binding> {
        self.rows
            .range(low..=now)
            .filter(move |(ts, _)| spec.contains(now, **ts))
            .flat_map(|(_, rows)| rows.iter())
    }
}

/// A window plus incrementally maintained match tables for each pattern of
/// the block reading it.
#[derive(Clone, Debug)]
pub(crate) struct BlockState {
    pub(crate) block: StreamBlock,
    pub(crate) window: WindowState,
    pub(crate) tables: Vec<PatternTable>,
}

impl BlockState {
    pub(crate) fn new(block: StreamBlock) -> Self {
        let window = WindowState::new(block.stream.clone(), block.window);
        let tables = vec![PatternTable::default(); block.patterns.len()];
        BlockState { block, window, tables }
    }

    pub(crate) fn insert(&mut self, fact: &TimestampedFact) {
        if !self.window.insert(fact.clone()) {
            return;
        }
        let ts = fact.timestamp();
        for (p, table) in self.block.patterns.iter().zip(self.tables.iter_mut()) {
            if let Some(b) = match_fact(p, fact, self.block.timestamp.as_ref()) {
                table.rows.entry(ts).or_default().insert(b);
            }
        }
    }

    pub(crate) fn advance(&mut self, now: Tick) {
        self.window.advance(now);
        let wm = self.window.low_watermark();
        for t in &mut self.tables {
            t.rows = t.rows.split_off(&wm);
        }
    }

    pub(crate) fn rows(&self, pattern: usize) -> impl Iterator<Item = &Binding> {
        self.tables[pattern].visible(self.window.spec(), self.window.low_watermark(), self.window.now())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::vocab::ns;

    fn fact(ts: Tick) -> TimestampedFact {
        TimestampedFact::from_parts(ns("a"), ns("p"), ns("b"), ts)
    }

    #[test]
    fn range_window_is_half_open_on_the_left() {
        let mut w = WindowState::new(StreamId(ns("s")), WindowSpec::Range(3));
        for ts in 0..6 {
            w.insert(fact(ts));
        }
        w.advance(5);
        let ts: Vec<Tick> = w.contents().map(|f| f.timestamp()).collect();
        assert_eq!(ts, vec![3, 4, 5]);
        assert_eq!(w.low_watermark(), 3);
    }

    #[test]
    fn now_window_sees_only_the_current_tick() {
        let mut w = WindowState::new(StreamId(ns("s")), WindowSpec::Now);
        w.insert(fact(1));
        w.insert(fact(2));
        w.advance(1);
        assert_eq!(w.contents().count(), 1);
        w.advance(2);
        assert_eq!(w.contents().map(|f| f.timestamp()).collect::<Vec<_>>(), vec![2]);
        assert!(!w.insert(fact(1)));
    }

    #[test]
    fn watermark_never_decreases() {
        let mut w = WindowState::new(StreamId(ns("s")), WindowSpec::Range(2));
        w.advance(10);
        w.advance(4);
        assert_eq!(w.low_watermark(), 9);
    }
}
