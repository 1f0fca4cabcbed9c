//! Detection-level types shared by every stage.

use serde::{Deserialize, Serialize};

/// Road-user category. Detector labels outside these two are kept as
/// [`ObjectClass::Other`] and dropped before tracking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectClass {
    #[serde(alias = "car", alias = "truck", alias = "bus", alias = "motorcycle")]
    Vehicle,
    #[serde(alias = "person")]
    Pedestrian,
    #[serde(other)]
    Other,
}

impl ObjectClass {
    pub fn is_road_user(self) -> bool {
        matches!(self, ObjectClass::Vehicle | ObjectClass::Pedestrian)
    }
}

/// Axis-aligned box in pixel coordinates, y growing downward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl BBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self { x1, y1, x2, y2 }
    }

    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self::new(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn center_x(&self) -> f64 {
        (self.x1 + self.x2) / 2.0
    }

    pub fn center_y(&self) -> f64 {
        (self.y1 + self.y2) / 2.0
    }

    /// Bottom edge (largest y).
    pub fn bottom(&self) -> f64 {
        self.y2
    }

    pub fn is_valid(&self) -> bool {
        self.x2 > self.x1 && self.y2 > self.y1 && [self.x1, self.y1, self.x2, self.y2].iter().all(|v| v.is_finite())
    }

    /// Intersection with the frame `[0, width] x [0, height]`, `None` when empty.
    pub fn clip_to(&self, width: f64, height: f64) -> Option<BBox> {
        let clipped = BBox::new(
            self.x1.clamp(0.0, width),
            self.y1.clamp(0.0, height),
            self.x2.clamp(0.0, width),
            self.y2.clamp(0.0, height),
        );
        (clipped.width() > 0.0 && clipped.height() > 0.0).then_some(clipped)
    }

    pub fn scaled(&self, k: f64) -> BBox {
        BBox::new(self.x1 * k, self.y1 * k, self.x2 * k, self.y2 * k)
    }
}

/// Intersection over union of two boxes, 0 for disjoint or degenerate input.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let iw = (a.x2.min(b.x2) - a.x1.max(b.x1)).max(0.0);
    let ih = (a.y2.min(b.y2) - a.y1.max(b.y1)).max(0.0);
    let inter = iw * ih;
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

/// One classified box observed at a capture timestamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub t: f64,
    pub frame_id: u64,
    pub class: ObjectClass,
    pub confidence: f64,
    pub bbox: BBox,
}

/// All detections of one captured frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub frame_id: u64,
    pub t: f64,
    pub detections: Vec<Detection>,
}

impl FrameRecord {
    pub fn new(frame_id: u64, t: f64, detections: Vec<Detection>) -> Self {
        Self { frame_id, t, detections }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iou_identical_disjoint_and_partial() {
        let a = BBox::new(0.0, 0.0, 2.0, 2.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &BBox::new(5.0, 5.0, 6.0, 6.0)), 0.0);
        let b = BBox::new(1.0, 0.0, 3.0, 2.0);
        assert!((iou(&a, &b) - 2.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn touching_edges_do_not_overlap() {
        let a = BBox::new(0.0, 0.0, 1.0, 1.0);
        let b = BBox::new(1.0, 0.0, 2.0, 1.0);
        assert_eq!(iou(&a, &b), 0.0);
    }

    #[test]
    fn clip_drops_fully_outside_boxes() {
        let b = BBox::new(-10.0, 10.0, -1.0, 20.0);
        assert!(b.clip_to(100.0, 100.0).is_none());
        let c = BBox::new(-10.0, 10.0, 5.0, 20.0).clip_to(100.0, 100.0).unwrap();
        assert_eq!(c.x1, 0.0);
        assert_eq!(c.width(), 5.0);
    }

    #[test]
    fn class_aliases() {
        let c: ObjectClass = serde_json::from_str("\"truck\"").unwrap();
        assert_eq!(c, ObjectClass::Vehicle);
        let p: ObjectClass = serde_json::from_str("\"person\"").unwrap();
        assert_eq!(p, ObjectClass::Pedestrian);
        let o: ObjectClass = serde_json::from_str("\"traffic light\"").unwrap();
        assert_eq!(o, ObjectClass::Other);
    }
}
