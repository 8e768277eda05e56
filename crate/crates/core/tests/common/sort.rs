//! Procedural SORT with the same gates, used as the association oracle,
//! and a generator of synthetic detection sequences.
#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use streamfuse::fusion::RuleWeights;
use streamfuse::tracker::*;

const GATE: f64 = 0.8;

struct SortTrack {
    id: u64,
    kf: KalmanState,
    misses: u32,
}

/// Maximum summed IoU over gated one-to-one matchings, by memoized search
/// over detections with a bitmask of used tracks.
fn best_matching(edges: &[Vec<(usize, f64)>]) -> Vec<Option<usize>> {
    fn go(i: usize, used: u128, edges: &[Vec<(usize, f64)>], memo: &mut HashMap<(usize, u128), (f64, Option<usize>)>) -> f64 {
        if i == edges.len() {
            return 0.0;
        }
        if let Some(&(v, _)) = memo.get(&(i, used)) {
            return v;
        }
        let mut best = (go(i + 1, used, edges, memo), None);
        for &(j, w) in &edges[i] {
            if used & (1 << j) == 0 {
                let v = w + go(i + 1, used | (1 << j), edges, memo);
                if v > best.0 {
                    best = (v, Some(j));
                }
            }
        }
        memo.insert((i, used), best);
        best.0
    }
    let mut memo = HashMap::new();
    go(0, 0, edges, &mut memo);
    let mut used = 0u128;
    let mut out = Vec::new();
    for i in 0..edges.len() {
        let choice = memo[&(i, used)].1;
        if let Some(j) = choice {
            used |= 1 << j;
        }
        out.push(choice);
    }
    out
}

/// `(frame, track, box)` rows for every detection kept by SORT.
pub fn sort_oracle(records: &[DetectionRecord], frames: u64, cfg: &TrackerConfig) -> Vec<(u64, u64, [u64; 4])> {
    let mut tracks: Vec<SortTrack> = Vec::new();
    let mut next_id = 0;
    let mut out = Vec::new();
    for t in 1..=frames {
        let dets: Vec<&DetectionRecord> = records.iter().filter(|r| r.frame == t).collect();
        assert!(tracks.len() <= 128);
        let edges: Vec<Vec<(usize, f64)>> = dets
            .iter()
            .map(|d| {
                if d.score <= GATE {
                    return Vec::new();
                }
                tracks
                    .iter()
                    .enumerate()
                    .map(|(j, tr)| (j, iou(&tr.kf.bbox(), &d.bbox)))
                    .filter(|&(_, w)| w > GATE)
                    .collect()
            })
            .collect();
        let assign = best_matching(&edges);
        let mut matched = vec![false; tracks.len()];
        let mut rows = Vec::new();
        for (i, a) in assign.iter().enumerate() {
            if let Some(j) = *a {
                matched[j] = true;
                tracks[j].kf = tracks[j].kf.update(&dets[i].bbox, &cfg.kalman);
                tracks[j].misses = 0;
                rows.push((t, tracks[j].id, key(&dets[i].bbox)));
            }
        }
        for (j, tr) in tracks.iter_mut().enumerate() {
            if !matched[j] {
                tr.misses += 1;
            }
        }
        tracks.retain(|tr| tr.misses <= cfg.max_age);
        for (i, d) in dets.iter().enumerate() {
            if assign[i].is_none() && d.score > cfg.spawn_score {
                next_id += 1;
                tracks.push(SortTrack {
                    id: next_id,
                    kf: KalmanState::init(&d.bbox, &cfg.kalman),
                    misses: 0,
                });
                rows.push((t, next_id, key(&d.bbox)));
            }
        }
        for tr in &mut tracks {
            tr.kf = tr.kf.predict(&cfg.kalman);
        }
        rows.sort();
        out.extend(rows);
    }
    out
}

pub fn key(b: &BBox) -> [u64; 4] {
    [b.x.to_bits(), b.y.to_bits(), b.w.to_bits(), b.h.to_bits()]
}

pub fn synthetic_sequence(seed: u64, frames: u64) -> Vec<DetectionRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=10);
    let dropout = rng.gen_range(0.0..0.1);
    let objects: Vec<(BBox, f64, f64, u64)> = (0..n)
        .map(|_| {
            (
                BBox::new(rng.gen_range(0.0..900.0), rng.gen_range(0.0..700.0), rng.gen_range(30.0..90.0), rng.gen_range(20.0..70.0)).unwrap(),
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
                rng.gen_range(1..=frames / 4),
            )
        })
        .collect();
    let mut out = Vec::new();
    for t in 1..=frames {
        for (b, vx, vy, start) in &objects {
            if t < *start || rng.gen_bool(dropout) {
                continue;
            }
            let k = (t - start) as f64;
            let bbox = BBox::new(
                b.x + vx * k + rng.gen_range(-0.5..0.5),
                b.y + vy * k + rng.gen_range(-0.5..0.5),
                b.w + rng.gen_range(-0.5..0.5),
                b.h + rng.gen_range(-0.5..0.5),
            )
            .unwrap();
            out.push(DetectionRecord {
                frame: t,
                bbox,
                score: rng.gen_range(0.7..1.0),
                label: "car".into(),
                appearance_id: None,
            });
        }
    }
    out
}

pub fn pipeline_rows(records: &[DetectionRecord], frames: u64, cfg: &TrackerConfig) -> Vec<(u64, u64, [u64; 4])> {
    let mut p = TrackingPipeline::new(cfg.clone(), RuleWeights::new()).unwrap();
    let mut out = Vec::new();
    for t in 1..=frames {
        let recs: Vec<DetectionRecord> = records.iter().filter(|r| r.frame == t).cloned().collect();
        let f = p.step(t, &recs).unwrap();
        let mut rows: Vec<_> = f.rows.iter().filter(|r| r.score >= 0.0).map(|r| (t, r.track, key(&r.bbox))).collect();
        rows.sort();
        out.extend(rows);
    }
    out
}

