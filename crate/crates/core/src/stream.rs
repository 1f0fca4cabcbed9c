//! JSON Lines detection stream: one object per frame.
//!
//! ```text
//! {"frame_id":0,"t_seconds":0.0,"detections":[{"class":"vehicle","confidence":1.0,"x1":..,"y1":..,"x2":..,"y2":..}]}
//! ```

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{BBox, Detection, FrameRecord, ObjectClass};

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WireDetection {
    pub class: ObjectClass,
    pub confidence: f64,
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WireFrame {
    pub frame_id: u64,
    pub t_seconds: f64,
    pub detections: Vec<WireDetection>,
}

impl From<&FrameRecord> for WireFrame {
    fn from(frame: &FrameRecord) -> Self {
        WireFrame {
            frame_id: frame.frame_id,
            t_seconds: frame.t,
            detections: frame
                .detections
                .iter()
                .map(|d| WireDetection {
                    class: d.class,
                    confidence: d.confidence,
                    x1: d.bbox.x1,
                    y1: d.bbox.y1,
                    x2: d.bbox.x2,
                    y2: d.bbox.y2,
                })
                .collect(),
        }
    }
}

impl WireFrame {
    fn into_record(self) -> Result<FrameRecord, String> {
        if !self.t_seconds.is_finite() {
            return Err("t_seconds is not finite".into());
        }
        let mut detections = Vec::with_capacity(self.detections.len());
        for (i, d) in self.detections.into_iter().enumerate() {
            let bbox = BBox::new(d.x1, d.y1, d.x2, d.y2);
            if !bbox.is_valid() {
                return Err(format!("detections[{i}]: box requires x2 > x1 and y2 > y1"));
            }
            if !(0.0..=1.0).contains(&d.confidence) {
                return Err(format!("detections[{i}].confidence: {} outside [0, 1]", d.confidence));
            }
            detections.push(Detection {
                t: self.t_seconds,
                frame_id: self.frame_id,
                class: d.class,
                confidence: d.confidence,
                bbox,
            });
        }
        Ok(FrameRecord::new(self.frame_id, self.t_seconds, detections))
    }
}

/// Parses one JSON line into a frame record. `line_no` is 1-based, for messages.
pub fn parse_frame_line(line: &str, line_no: usize) -> Result<FrameRecord, StreamError> {
    let wire: WireFrame = serde_json::from_str(line).map_err(|e| StreamError::Parse {
        line: line_no,
        message: e.to_string(),
    })?;
    wire.into_record().map_err(|message| StreamError::Parse { line: line_no, message })
}

/// Lazily reads frames from a JSON Lines source, skipping blank lines.
pub struct JsonlFrames<R> {
    reader: R,
    line_no: usize,
    buf: String,
}

impl<R: BufRead> JsonlFrames<R> {
    pub fn new(reader: R) -> Self {
        Self { reader, line_no: 0, buf: String::new() }
    }
}

impl<R: BufRead> Iterator for JsonlFrames<R> {
    type Item = Result<FrameRecord, StreamError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {
                    self.line_no += 1;
                    let line = self.buf.trim();
                    if line.is_empty() {
                        continue;
                    }
                    return Some(parse_frame_line(line, self.line_no));
                }
                Err(e) => return Some(Err(e.into())),
            }
        }
    }
}

/// Reads a whole stream, failing on the first malformed line.
pub fn read_frames<R: BufRead>(reader: R) -> Result<Vec<FrameRecord>, StreamError> {
    JsonlFrames::new(reader).collect()
}

pub fn write_frames<'a, W: Write>(
    mut out: W,
    frames: impl IntoIterator<Item = &'a FrameRecord>,
) -> std::io::Result<()> {
    for frame in frames {
        serde_json::to_writer(&mut out, &WireFrame::from(frame))?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_frames() {
        let frame = FrameRecord::new(
            7,
            0.25,
            vec![Detection {
                t: 0.25,
                frame_id: 7,
                class: ObjectClass::Pedestrian,
                confidence: 1.0,
                bbox: BBox::new(1.5, 2.0, 10.25, 40.0),
            }],
        );
        let mut bytes = Vec::new();
        write_frames(&mut bytes, [&frame]).unwrap();
        let back = read_frames(bytes.as_slice()).unwrap();
        assert_eq!(back, vec![frame]);
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let text = "{\"frame_id\":0,\"t_seconds\":0.0,\"detections\":[]}\n\nnot json\n";
        let err = read_frames(text.as_bytes()).unwrap_err();
        match err {
            StreamError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inverted_boxes_are_rejected() {
        let line = r#"{"frame_id":0,"t_seconds":0.0,"detections":[{"class":"vehicle","confidence":0.9,"x1":5,"y1":0,"x2":1,"y2":3}]}"#;
        assert!(parse_frame_line(line, 1).is_err());
    }
}
