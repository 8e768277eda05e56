use std::collections::{BTreeMap, BTreeSet};

use super::detection::{DetectionRecord, TrackerError};
use super::kalman::{KalmanParams, KalmanState};
use crate::geom::BBox;
use crate::rdf::vocab::{ns, rdf_type, sosa, ssr};
use crate::rdf::{Iri, Literal, Term, Tick, TimestampedFact};

/// Tracker settings. Score and IoU gates of the association rules live in
/// the rules themselves; `spawn_score` decides which unmatched detections
/// start tracklets.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackerConfig {
    pub kalman: KalmanParams,
    pub spawn_score: f64,
    pub max_age: u32,
    pub min_hits: u32,
    pub vmatch_score: f64,
    pub emit_predictions: bool,
    pub detector: Iri,
    pub camera: Iri,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            kalman: KalmanParams::default(),
            spawn_score: 0.8,
            max_age: 3,
            min_hits: 1,
            vmatch_score: 0.9,
            emit_predictions: true,
            detector: ns("det1"),
            camera: ns("cam1"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrackStatus {
    Tentative,
    Confirmed,
    Ended,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrackletState {
    pub number: u64,
    pub id: Iri,
    pub object: Iri,
    pub kalman: KalmanState,
    pub hits: u32,
    pub misses: u32,
    pub status: TrackStatus,
    pub end_tick: Option<Tick>,
    /// Tick of the last detection associated with this tracklet.
    pub last_match: Tick,
    pub last_box: Term,
    /// Predicted box for the current tick, as minted IRI and geometry.
    pub prediction: Option<(Term, BBox)>,
}

/// A detection minted at the current tick.
#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    pub term: Term,
    pub record: DetectionRecord,
}

/// One line of MOT-style output.
#[derive(Clone, Debug, PartialEq)]
pub struct MotRow {
    pub frame: Tick,
    pub track: u64,
    pub bbox: BBox,
    /// Detection score, or -1 for a prediction without detection.
    pub score: f64,
}

impl MotRow {
    /// `frame,track_id,x,y,w,h,score,-1,-1,-1`
    pub fn to_csv(&self) -> String {
        let b = &self.bbox;
        format!(
            "{},{},{:.3},{:.3},{:.3},{:.3},{},-1,-1,-1",
            self.frame, self.track, b.x, b.y, b.w, b.h, self.score
        )
    }
}

/// Feature extraction and tracklet lifecycle. Box IRIs `:b<n>` come from
/// one counter shared by detections and predictions.
#[derive(Clone, Debug)]
pub struct Tracker {
    pub config: TrackerConfig,
    tracklets: Vec<TrackletState>,
    next_box: u64,
    next_track: u64,
    /// Appearance id to the latest detection box carrying it.
    gallery: BTreeMap<String, Term>,
}

fn lit(v: f64) -> Term {
    Term::Literal(Literal::decimal(v))
}

fn geometry(b: &Term, bb: &BBox, t: Tick) -> Vec<TimestampedFact> {
    [("x", bb.x), ("y", bb.y), ("w", bb.w), ("h", bb.h)]
        .into_iter()
        .map(|(p, v)| TimestampedFact::from_parts(b.clone(), ns(p), lit(v), t))
        .collect()
}

fn label_class(label: &str) -> Iri {
    let local: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    ns(&local)
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Self {
        Tracker {
            config,
            tracklets: Vec::new(),
            next_box: 0,
            next_track: 0,
            gallery: BTreeMap::new(),
        }
    }

    pub fn tracklets(&self) -> &[TrackletState] {
        &self.tracklets
    }

    pub fn live(&self) -> impl Iterator<Item = &TrackletState> {
        self.tracklets.iter().filter(|t| t.status != TrackStatus::Ended)
    }

    /// The live tracklet following `object`.
    pub fn by_object(&self, object: &Term) -> Option<&TrackletState> {
        self.live().find(|t| Term::Iri(t.object.clone()) == *object)
    }

    fn mint_box(&mut self) -> Term {
        self.next_box += 1;
        Term::Iri(ns(&format!("b{}", self.next_box)))
    }

    /// Lifts the records of frame `t` into facts: the image observation, one
    /// detection group per record with geometry and class, and visual-match
    /// facts for records whose appearance id was seen before.
    pub fn extract_features(
        &mut self,
        records: &[DetectionRecord],
        t: Tick,
    ) -> Result<(Vec<TimestampedFact>, Vec<Detection>), TrackerError> {
        let image = ns(&format!("image{t}"));
        let obs = Term::quoted(image.clone(), rdf_type(), ns("Image2D"));
        let mut facts = vec![
            TimestampedFact::from_parts(obs.clone(), rdf_type(), sosa("Observation"), t),
            TimestampedFact::from_parts(obs, sosa("madeBySensor"), self.config.camera.clone(), t),
        ];
        let mut dets = Vec::new();
        let mut seen = Vec::new();
        for rec in records {
            rec.validate()?;
            if rec.frame != t {
                return Err(TrackerError::Malformed(format!("record of frame {} at tick {t}", rec.frame)));
            }
            let b = self.mint_box();
            let m = Term::quoted(self.config.detector.clone(), ns("det"), b.clone());
            let group = [
                (rdf_type(), Term::Iri(ns("Detection"))),
                (sosa("hasSimpleResult"), Term::Literal(Literal::string(&rec.label))),
                (ns("score"), lit(rec.score)),
                (ns("isDetectionOf"), Term::Iri(image.clone())),
                (sosa("usedProcedure"), Term::Iri(ns("Yolo"))),
            ];
            facts.extend(group.into_iter().map(|(p, o)| TimestampedFact::from_parts(m.clone(), p, o, t)));
            facts.extend(geometry(&b, &rec.bbox, t));
            facts.push(TimestampedFact::from_parts(b.clone(), rdf_type(), label_class(&rec.label), t));
            if let Some(a) = &rec.appearance_id {
                if let Some(prev) = self.gallery.get(a) {
                    let vm = Term::quoted(b.clone(), ns("vMatch"), prev.clone());
                    facts.push(TimestampedFact::from_parts(vm, ns("score"), lit(self.config.vmatch_score), t));
                    // A one-box proposal tracklet lets the re-identification
                    // rule see the new detection as a tracklet box.
                    let local = b.as_iri().map(|i| i.as_str().rsplit('#').next().unwrap_or("").to_string());
                    let prop = Term::quoted(ns(&format!("prop_{}", local.unwrap_or_default())), ns("trk"), b.clone());
                    facts.push(TimestampedFact::from_parts(prop, rdf_type(), ns("Tracklet"), t));
                }
                seen.push((a.clone(), b.clone()));
            }
            dets.push(Detection {
                term: b,
                record: rec.clone(),
            });
        }
        self.gallery.extend(seen);
        Ok((facts, dets))
    }

    /// Applies the chosen `(detection, object)` associations of tick `t`.
    /// Returns facts stamped `t` and `t + 1` (in that order) and the MOT rows
    /// of tick `t`.
    pub fn advance_tracklets(
        &mut self,
        chosen: &[(Term, Term)],
        detections: &[Detection],
        t: Tick,
    ) -> (Vec<TimestampedFact>, Vec<MotRow>) {
        let cfg = self.config.clone();
        let mut now = Vec::new();
        let mut next = Vec::new();
        let mut rows = Vec::new();
        let det_index: BTreeMap<&Term, &Detection> = detections.iter().map(|d| (&d.term, d)).collect();
        let mut used: BTreeSet<Term> = BTreeSet::new();
        let mut matched: BTreeSet<u64> = BTreeSet::new();
        for (d, o) in chosen {
            let Some(det) = det_index.get(d) else { continue };
            let Some(tr) = self
                .tracklets
                .iter_mut()
                .find(|tr| tr.status != TrackStatus::Ended && Term::Iri(tr.object.clone()) == *o)
            else {
                continue;
            };
            if matched.contains(&tr.number) || !used.insert(d.clone()) {
                continue;
            }
            matched.insert(tr.number);
            tr.kalman = tr.kalman.update(&det.record.bbox, &cfg.kalman);
            tr.hits += 1;
            tr.misses = 0;
            tr.last_match = t;
            tr.last_box = d.clone();
            if tr.hits >= cfg.min_hits {
                tr.status = TrackStatus::Confirmed;
            }
            now.push(TimestampedFact::from_parts(tr.id.clone(), ns("trk"), d.clone(), t));
            now.push(TimestampedFact::from_parts(tr.object.clone(), ns("inFOV"), ssr("FoV"), t));
            rows.push(MotRow {
                frame: t,
                track: tr.number,
                bbox: det.record.bbox,
                score: det.record.score,
            });
        }
        for tr in self.tracklets.iter_mut() {
            if tr.status == TrackStatus::Ended || matched.contains(&tr.number) {
                continue;
            }
            tr.misses += 1;
            if tr.misses > cfg.max_age {
                tr.status = TrackStatus::Ended;
                tr.end_tick = Some(t);
                now.push(TimestampedFact::from_parts(
                    tr.id.clone(),
                    ns("ends"),
                    Term::Literal(Literal::integer(tr.last_match as i64)),
                    t,
                ));
            } else if cfg.emit_predictions {
                if let Some((_, b)) = &tr.prediction {
                    rows.push(MotRow {
                        frame: t,
                        track: tr.number,
                        bbox: *b,
                        score: -1.0,
                    });
                }
            }
        }
        for det in detections {
            if used.contains(&det.term) || det.record.score <= cfg.spawn_score {
                continue;
            }
            self.next_track += 1;
            let n = self.next_track;
            let hits = 1;
            let tr = TrackletState {
                number: n,
                id: ns(&format!("trk{n}")),
                object: ns(&format!("obj{n}")),
                kalman: KalmanState::init(&det.record.bbox, &cfg.kalman),
                hits,
                misses: 0,
                status: if hits >= cfg.min_hits {
                    TrackStatus::Confirmed
                } else {
                    TrackStatus::Tentative
                },
                end_tick: None,
                last_match: t,
                last_box: det.term.clone(),
                prediction: None,
            };
            now.push(TimestampedFact::from_parts(tr.id.clone(), ns("trk"), det.term.clone(), t));
            rows.push(MotRow {
                frame: t,
                track: n,
                bbox: det.record.bbox,
                score: det.record.score,
            });
            self.tracklets.push(tr);
        }
        // Predictions for the next tick.
        let mut boxes = Vec::new();
        for i in 0..self.tracklets.len() {
            if self.tracklets[i].status == TrackStatus::Ended {
                self.tracklets[i].prediction = None;
                continue;
            }
            let b = self.mint_box();
            boxes.push((i, b));
        }
        for (i, b) in boxes {
            let tr = &mut self.tracklets[i];
            tr.kalman = tr.kalman.predict(&cfg.kalman);
            let bb = tr.kalman.bbox();
            let m = Term::quoted(tr.id.clone(), ns("trk"), b.clone());
            next.push(TimestampedFact::from_parts(m.clone(), rdf_type(), ns("Tracklet"), t + 1));
            next.push(TimestampedFact::from_parts(m, sosa("usedProcedure"), ns("KalmanFilter"), t + 1));
            next.extend(geometry(&b, &bb, t + 1));
            next.push(TimestampedFact::from_parts(tr.id.clone(), ns("trklet"), tr.object.clone(), t + 1));
            if tr.misses > 0 {
                next.push(TimestampedFact::from_parts(
                    tr.id.clone(),
                    ns("ends"),
                    Term::Literal(Literal::integer(tr.last_match as i64)),
                    t + 1,
                ));
                next.push(TimestampedFact::from_parts(tr.last_box.clone(), sosa("isSampleOf"), tr.object.clone(), t + 1));
            }
            tr.prediction = Some((b, bb));
        }
        self.tracklets.retain(|tr| tr.status != TrackStatus::Ended);
        now.extend(next);
        rows.sort_by_key(|r| r.track);
        (now, rows)
    }
}
