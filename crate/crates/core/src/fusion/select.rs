use std::collections::{BTreeMap, BTreeSet};

use super::hungarian::max_weight_matching;
use crate::rdf::{Iri, Term, Tick, TimestampedFact};

/// One soft-rule instance competing for a place in the selected world.
#[derive(Clone, Debug, PartialEq)]
pub struct Hypothesis {
    pub rule: Iri,
    pub tick: Tick,
    /// Facts asserted if chosen. Their timestamps equal `tick`.
    pub facts: Vec<TimestampedFact>,
    /// The detection box and target of an association. Both `None` for
    /// events such as FoV entries, which bypass the one-to-one constraints.
    pub detection: Option<Term>,
    pub target: Option<Term>,
    /// Instantiating evidence in [0, 1].
    pub confidence: f64,
    pub evidence: Vec<String>,
    pub filters: Vec<String>,
}

impl Hypothesis {
    pub fn is_association(&self) -> bool {
        self.detection.is_some() && self.target.is_some()
    }

    fn pair(&self) -> Option<(&Term, &Term)> {
        Some((self.detection.as_ref()?, self.target.as_ref()?))
    }
}

/// Per-rule soft weights. Unknown rules weigh 1.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RuleWeights(BTreeMap<Iri, f64>);

pub const DEFAULT_WEIGHT: f64 = 1.0;

impl RuleWeights {
    pub fn new() -> Self {
        Self::default()
    }

    /// Uniform weights for the given rule ids.
    pub fn uniform<'a>(rules: impl IntoIterator<Item = &'a Iri>, w: f64) -> Self {
        RuleWeights(rules.into_iter().map(|r| (r.clone(), w)).collect())
    }

    pub fn get(&self, rule: &Iri) -> f64 {
        self.0.get(rule).copied().unwrap_or(DEFAULT_WEIGHT)
    }

    /// Sets a weight, projecting negatives to 0.
    pub fn set(&mut self, rule: Iri, w: f64) {
        self.0.insert(rule, w.max(0.0));
    }

    /// Adds an entry with the default weight for each rule lacking one.
    pub fn ensure<'a>(&mut self, rules: impl IntoIterator<Item = &'a Iri>) {
        for r in rules {
            self.0.entry(r.clone()).or_insert(DEFAULT_WEIGHT);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Iri, f64)> {
        self.0.iter().map(|(k, v)| (k, *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Multiplies every weight by `k > 0`.
    pub fn scaled(&self, k: f64) -> Self {
        RuleWeights(self.0.iter().map(|(r, w)| (r.clone(), w * k)).collect())
    }
}

/// Why a hypothesis was left out. Indices refer to
/// [`WorldSelection::hypotheses`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rejection {
    /// Another hypothesis for the same detection and target had higher
    /// utility.
    Dominated { by: usize },
    /// The optimal matching gave its detection or target to `winner`.
    Conflict { winner: usize },
    /// Zero utility; choosing it would not change the score.
    NoUtility,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WorldSelection {
    pub hypotheses: Vec<Hypothesis>,
    pub weights: Vec<f64>,
    /// Indices of chosen hypotheses, ascending.
    pub chosen: Vec<usize>,
    pub rejected: Vec<(usize, Rejection)>,
    pub score: f64,
}

impl WorldSelection {
    pub fn chosen(&self) -> impl Iterator<Item = &Hypothesis> {
        self.chosen.iter().map(|&i| &self.hypotheses[i])
    }

    pub fn utility(&self, i: usize) -> f64 {
        self.weights[i] * self.hypotheses[i].confidence
    }

    pub fn is_chosen(&self, i: usize) -> bool {
        self.chosen.binary_search(&i).is_ok()
    }
}

/// Relative slack when comparing optimal scores computed along different
/// summation orders.
const SCORE_EPS: f64 = 1e-12;

fn same_score(a: f64, b: f64) -> bool {
    (a - b).abs() <= SCORE_EPS * (1.0 + a.abs().max(b.abs()))
}

/// Chooses the hypotheses maximizing the summed utility
/// `weight(rule) * confidence` such that no detection and no target is used
/// twice. Events are always chosen. Among optimal matchings the one taking
/// lexicographically smallest (target, detection) pairs first wins.
pub fn select_world(hypotheses: &[Hypothesis], weights: &RuleWeights) -> WorldSelection {
    let ws: Vec<f64> = hypotheses.iter().map(|h| weights.get(&h.rule)).collect();
    let utility = |i: usize| ws[i] * hypotheses[i].confidence;
    let mut chosen = Vec::new();
    let mut rejected = Vec::new();
    let mut score = 0.0;

    // Best hypothesis per (detection, target) pair.
    let mut best: BTreeMap<(&Term, &Term), usize> = BTreeMap::new();
    for (i, h) in hypotheses.iter().enumerate() {
        match h.pair() {
            None => {
                chosen.push(i);
                score += utility(i);
            }
            Some(pair) => {
                let slot = best.entry(pair).or_insert(i);
                if *slot != i && beats(hypotheses, &ws, i, *slot) {
                    *slot = i;
                }
            }
        }
    }
    for (i, h) in hypotheses.iter().enumerate() {
        if let Some(pair) = h.pair() {
            let w = best[&pair];
            if w != i {
                rejected.push((i, Rejection::Dominated { by: w }));
            }
        }
    }

    let dets: Vec<&Term> = best.keys().map(|k| k.0).collect::<BTreeSet<_>>().into_iter().collect();
    let tgts: Vec<&Term> = best.keys().map(|k| k.1).collect::<BTreeSet<_>>().into_iter().collect();
    let di = |t: &Term| dets.binary_search(&t).expect("detection index");
    let ti = |t: &Term| tgts.binary_search(&t).expect("target index");
    let (nd, nt) = (dets.len(), tgts.len());
    let mut util = vec![None; nd * nt];
    let mut who = vec![usize::MAX; nd * nt];
    for (&(d, t), &i) in &best {
        util[di(d) * nt + ti(t)] = Some(utility(i));
        who[di(d) * nt + ti(t)] = i;
    }

    let solve = |util: &[Option<f64>]| -> (f64, Vec<(usize, usize)>) {
        let m = max_weight_matching(nd, nt, util);
        let s = m.iter().map(|&(r, c)| util[r * nt + c].unwrap_or(0.0)).sum();
        (s, m)
    };
    let (opt, _) = solve(&util);

    // Fix pairs in (target, detection) order while an optimum remains.
    let mut order: Vec<(usize, usize)> = (0..nd)
        .flat_map(|r| (0..nt).map(move |c| (r, c)))
        .filter(|&(r, c)| util[r * nt + c].is_some_and(|w| w > 0.0))
        .collect();
    order.sort_by_key(|&(r, c)| (c, r));
    let mut fixed: Vec<(usize, usize)> = Vec::new();
    let mut fixed_score = 0.0;
    let mut row_used = vec![false; nd];
    let mut col_used = vec![false; nt];
    for (r, c) in order {
        if row_used[r] || col_used[c] {
            continue;
        }
        let w = util[r * nt + c].expect("positive pair");
        let mut rest = util.clone();
        for rr in 0..nd {
            for cc in 0..nt {
                if row_used[rr] || col_used[cc] || rr == r || cc == c {
                    rest[rr * nt + cc] = None;
                }
            }
        }
        let (s, _) = solve(&rest);
        if same_score(fixed_score + w + s, opt) {
            fixed.push((r, c));
            fixed_score += w;
            row_used[r] = true;
            col_used[c] = true;
        }
    }
    score += fixed_score;

    let mut det_owner = vec![None; nd];
    let mut tgt_owner = vec![None; nt];
    for &(r, c) in &fixed {
        let i = who[r * nt + c];
        chosen.push(i);
        det_owner[r] = Some(i);
        tgt_owner[c] = Some(i);
    }
    for (&(d, t), &i) in &best {
        let (r, c) = (di(d), ti(t));
        if det_owner[r] == Some(i) {
            continue;
        }
        let reason = match det_owner[r].or(tgt_owner[c]) {
            Some(winner) => Rejection::Conflict { winner },
            None => Rejection::NoUtility,
        };
        rejected.push((i, reason));
    }
    chosen.sort_unstable();
    rejected.sort_by_key(|r| r.0);
    WorldSelection {
        hypotheses: hypotheses.to_vec(),
        weights: ws,
        chosen,
        rejected,
        score,
    }
}

/// The selection that asserts exactly the `gold` facts: events are kept,
/// and each gold association fact is taken from its highest-utility
/// hypothesis. Everything else is rejected as a conflict with the gold
/// choice sharing its detection or target, or as dominated.
pub fn select_gold(hypotheses: &[Hypothesis], gold: &BTreeSet<TimestampedFact>, weights: &RuleWeights) -> WorldSelection {
    let ws: Vec<f64> = hypotheses.iter().map(|h| weights.get(&h.rule)).collect();
    let mut chosen = Vec::new();
    let mut by_fact: BTreeMap<&TimestampedFact, usize> = BTreeMap::new();
    for (i, h) in hypotheses.iter().enumerate() {
        if !h.is_association() {
            chosen.push(i);
            continue;
        }
        if !h.facts.is_empty() && h.facts.iter().all(|f| gold.contains(f)) {
            let key = &h.facts[0];
            let slot = by_fact.entry(key).or_insert(i);
            if *slot != i && beats(hypotheses, &ws, i, *slot) {
                *slot = i;
            }
        }
    }
    chosen.extend(by_fact.values().copied());
    chosen.sort_unstable();
    let mut rejected = Vec::new();
    for (i, h) in hypotheses.iter().enumerate() {
        if chosen.binary_search(&i).is_ok() {
            continue;
        }
        let same = h.facts.first().and_then(|f| by_fact.get(f)).copied();
        let clash = chosen
            .iter()
            .copied()
            .find(|&c| hypotheses[c].is_association() && (hypotheses[c].detection == h.detection || hypotheses[c].target == h.target));
        let reason = match (same, clash) {
            (Some(by), _) => Rejection::Dominated { by },
            (None, Some(winner)) => Rejection::Conflict { winner },
            (None, None) => Rejection::NoUtility,
        };
        rejected.push((i, reason));
    }
    let score = chosen.iter().map(|&i| ws[i] * hypotheses[i].confidence).sum();
    WorldSelection {
        hypotheses: hypotheses.to_vec(),
        weights: ws,
        chosen,
        rejected,
        score,
    }
}

/// Does hypothesis `a` beat `b` for the same pair: higher utility, then
/// smaller rule id, then earlier input position.
fn beats(hs: &[Hypothesis], ws: &[f64], a: usize, b: usize) -> bool {
    let (ua, ub) = (ws[a] * hs[a].confidence, ws[b] * hs[b].confidence);
    if ua != ub {
        return ua > ub;
    }
    (&hs[a].rule, a) < (&hs[b].rule, b)
}
