//! Tracking-by-detection substrate: Kalman motion model, detection input,
//! feature extraction into RDF-star facts, tracklet lifecycle and the
//! rule-driven tracking pipeline.

mod detection;
pub mod kalman;
mod pipeline;
mod tracklet;

pub use crate::geom::{iou, BBox};
pub use detection::{parse_detections, DetectionRecord, TrackerError};
pub use kalman::{KalmanParams, KalmanState};
pub use pipeline::{
    chosen_associations, explain_frame, tracking_rules, DetectionShaper, FrameResult, PipelineError,
    TrackingPipeline, TRACKING_RULES,
};
pub use tracklet::{Detection, MotRow, TrackStatus, Tracker, TrackerConfig, TrackletState};
