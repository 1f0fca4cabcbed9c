//! Event-level scoring: one-to-one temporal matching and F1.
//!
//! A prediction is a true positive when it lies within `window` seconds of a
//! ground-truth event in the same video. Pairs are matched greedily in order of
//! increasing time distance, so each event counts at most once on either side.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub const DEFAULT_MATCH_WINDOW: f64 = 10.0;

/// A labeled or predicted event: which recording, and when.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedEvent {
    pub video_id: String,
    pub time: f64,
}

impl TimedEvent {
    pub fn new(video_id: impl Into<String>, time: f64) -> Self {
        Self { video_id: video_id.into(), time }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventMatch {
    pub prediction: usize,
    pub ground_truth: usize,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchOutcome {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    /// Indices refer to the input slices.
    pub matches: Vec<EventMatch>,
}

pub fn match_events(predictions: &[TimedEvent], ground_truth: &[TimedEvent], window: f64) -> MatchOutcome {
    let mut candidates: Vec<(f64, f64, f64, usize, usize)> = Vec::new();
    for (pi, p) in predictions.iter().enumerate() {
        for (gi, g) in ground_truth.iter().enumerate() {
            let dt = (p.time - g.time).abs();
            if p.video_id == g.video_id && dt <= window {
                candidates.push((dt, g.time, p.time, gi, pi));
            }
        }
    }
    // Ties are broken by times, not input positions, so the counts do not
    // depend on input order.
    candidates.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.total_cmp(&b.2))
            .then(a.3.cmp(&b.3))
            .then(a.4.cmp(&b.4))
    });
    let mut p_used = vec![false; predictions.len()];
    let mut g_used = vec![false; ground_truth.len()];
    let mut matches = Vec::new();
    for (dt, _, _, gi, pi) in candidates {
        if !p_used[pi] && !g_used[gi] {
            p_used[pi] = true;
            g_used[gi] = true;
            matches.push(EventMatch { prediction: pi, ground_truth: gi, dt });
        }
    }
    let tp = matches.len();
    MatchOutcome { tp, fp: predictions.len() - tp, fn_: ground_truth.len() - tp, matches }
}

/// `2 tp / (2 tp + fp + fn)`, and 0 when there is nothing to score.
pub fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

fn ratio(num: usize, denom: usize) -> f64 {
    if denom == 0 {
        0.0
    } else {
        num as f64 / denom as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub videos: usize,
    pub events: usize,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub fps: Option<f64>,
}

impl EvalReport {
    pub fn from_counts(videos: usize, events: usize, tp: usize, fp: usize, fn_: usize, fps: Option<f64>) -> Self {
        Self {
            videos,
            events,
            tp,
            fp,
            fn_,
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fn_),
            f1: f1(tp, fp, fn_),
            fps,
        }
    }

    /// Aligned text table: `# videos | # events | TP | FP | FN | F1 | FPS`.
    pub fn render_table(&self) -> String {
        let fps = self.fps.map_or_else(|| "-".to_string(), |f| format!("{f:.1}"));
        let cells = [
            self.videos.to_string(),
            self.events.to_string(),
            self.tp.to_string(),
            self.fp.to_string(),
            self.fn_.to_string(),
            format!("{:.3}", self.f1),
            fps,
        ];
        let headers = ["# videos", "# events", "TP", "FP", "FN", "F1", "FPS"];
        let widths: Vec<usize> = headers.iter().zip(&cells).map(|(h, c)| h.len().max(c.len())).collect();
        let row = |items: &[String]| {
            items.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect::<Vec<_>>().join(" | ")
        };
        let head: Vec<String> = headers.iter().map(|s| s.to_string()).collect();
        let mut out = String::new();
        let _ = writeln!(out, "{}", row(&head));
        let _ = writeln!(out, "{}", widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-|-"));
        let _ = writeln!(out, "{}", row(&cells));
        out
    }
}

/// Scores predictions against labels. The video count covers every video id
/// that appears in either list unless `videos` overrides it.
pub fn report(
    predictions: &[TimedEvent],
    ground_truth: &[TimedEvent],
    window: f64,
    videos: Option<usize>,
    fps: Option<f64>,
) -> (EvalReport, MatchOutcome) {
    let outcome = match_events(predictions, ground_truth, window);
    let seen: BTreeSet<&str> = predictions.iter().chain(ground_truth).map(|e| e.video_id.as_str()).collect();
    let rep = EvalReport::from_counts(
        videos.unwrap_or(seen.len()),
        ground_truth.len(),
        outcome.tp,
        outcome.fp,
        outcome.fn_,
        fps,
    );
    (rep, outcome)
}

/// Per-video TP/FP/FN counts, for diagnostics.
pub fn per_video(predictions: &[TimedEvent], ground_truth: &[TimedEvent], window: f64) -> BTreeMap<String, (usize, usize, usize)> {
    let ids: BTreeSet<&str> = predictions.iter().chain(ground_truth).map(|e| e.video_id.as_str()).collect();
    ids.into_iter()
        .map(|id| {
            let p: Vec<TimedEvent> = predictions.iter().filter(|e| e.video_id == id).cloned().collect();
            let g: Vec<TimedEvent> = ground_truth.iter().filter(|e| e.video_id == id).cloned().collect();
            let m = match_events(&p, &g, window);
            (id.to_string(), (m.tp, m.fp, m.fn_))
        })
        .collect()
}
