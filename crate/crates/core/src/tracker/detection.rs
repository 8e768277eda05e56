use thiserror::Error;

use crate::geom::BBox;
use crate::rdf::Tick;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackerError {
    #[error("detection line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("malformed detection record: {0}")]
    Malformed(String),
}

/// One detector output for one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectionRecord {
    pub frame: Tick,
    pub bbox: BBox,
    pub score: f64,
    pub label: String,
    /// Precomputed appearance cluster; equal ids mean a visual match.
    pub appearance_id: Option<String>,
}

impl DetectionRecord {
    pub fn validate(&self) -> Result<(), TrackerError> {
        if !(0.0..=1.0).contains(&self.score) {
            return Err(TrackerError::Malformed(format!("score {} outside [0, 1]", self.score)));
        }
        if BBox::new(self.bbox.x, self.bbox.y, self.bbox.w, self.bbox.h).is_none() {
            return Err(TrackerError::Malformed(format!("invalid box {}", self.bbox)));
        }
        if self.label.is_empty() {
            return Err(TrackerError::Malformed("empty label".into()));
        }
        Ok(())
    }
}

/// Parses `frame,x,y,w,h,score,label[,appearance_id]` lines. A first line
/// whose frame field is not a number is taken as a header. Blank lines and
/// `#` comments are skipped. Records come back in file order.
pub fn parse_detections(text: &str) -> Result<Vec<DetectionRecord>, TrackerError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if n == 0 && fields[0].parse::<f64>().is_err() {
            continue;
        }
        let err = |message: String| TrackerError::Csv { line: n + 1, message };
        if !(7..=8).contains(&fields.len()) {
            return Err(err(format!("expected 7 or 8 fields, found {}", fields.len())));
        }
        let frame: Tick = fields[0].parse().map_err(|_| err(format!("bad frame {:?}", fields[0])))?;
        let num = |i: usize, name: &str| -> Result<f64, TrackerError> {
            fields[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("bad {name} {:?}", fields[i])))
        };
        let (x, y, w, h) = (num(1, "x")?, num(2, "y")?, num(3, "w")?, num(4, "h")?);
        let bbox = BBox::new(x, y, w, h).ok_or_else(|| err(format!("box needs w, h > 0, got {w}x{h}")))?;
        let score = num(5, "score")?;
        let rec = DetectionRecord {
            frame,
            bbox,
            score,
            label: fields[6].to_string(),
            appearance_id: fields.get(7).filter(|s| !s.is_empty()).map(|s| s.to_string()),
        };
        rec.validate().map_err(|e| err(e.to_string()))?;
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_appearance_are_optional() {
        let recs = parse_detections("frame,x,y,w,h,score,label\n1,0,0,2,2,0.9,car\n2,1,0,2,2,0.85,car,white\n").unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].appearance_id, None);
        assert_eq!(recs[1].appearance_id.as_deref(), Some("white"));
        assert_eq!(parse_detections("1,0,0,2,2,0.9,car").unwrap().len(), 1);
    }

    #[test]
    fn bad_lines_are_located() {
        assert_eq!(
            parse_detections("1,0,0,2,2,0.9,car\n2,0,0,0,2,0.9,car").unwrap_err(),
            TrackerError::Csv {
                line: 2,
                message: "box needs w, h > 0, got 0x2".into()
            }
        );
        assert!(matches!(parse_detections("1,0,0,2,2,1.5,car"), Err(TrackerError::Csv { line: 1, .. })));
        assert!(matches!(parse_detections("1,0,0,2,2"), Err(TrackerError::Csv { line: 1, .. })));
    }
}
