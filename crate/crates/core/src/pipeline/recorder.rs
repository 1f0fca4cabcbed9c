//! Event assembly: pre-trigger context from the ring buffer, post-trigger
//! frames as they arrive, and persistence through an [`EventSink`].

use std::collections::VecDeque;
use std::io::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gps::GpsFix;
use crate::rules::EventType;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventGps {
    pub lat: f64,
    pub lon: f64,
}

impl From<&GpsFix> for EventGps {
    fn from(fix: &GpsFix) -> Self {
        Self { lat: fix.lat_wgs84, lon: fix.lon_wgs84 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearCrashEvent {
    pub event_id: u64,
    pub track_id: u64,
    pub event_type: EventType,
    pub trigger_time: f64,
    pub trigger_frame_id: u64,
    pub ttc_h: f64,
    pub ttc_w: f64,
    pub omega: f64,
    pub motion_product: f64,
    pub size_rule_pass: bool,
    pub motion_rule_pass: bool,
    pub gps: Option<EventGps>,
    pub clip_start: f64,
    pub clip_end: f64,
    pub frame_ids: Vec<u64>,
    /// The stream ended before the post-trigger window was complete.
    pub truncated: bool,
}

/// Frame id and capture time, the unit the clip window is built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameStamp {
    pub frame_id: u64,
    pub t: f64,
}

/// Ring buffer of the most recent frames, bounded both by count and by age.
#[derive(Debug, Clone)]
pub struct ContextBuffer<T> {
    frames: VecDeque<(FrameStamp, T)>,
    capacity: usize,
    span: f64,
}

impl<T: Clone> ContextBuffer<T> {
    pub fn new(capacity: usize, span: f64) -> Self {
        let capacity = capacity.max(1);
        Self { frames: VecDeque::with_capacity(capacity), capacity, span }
    }

    pub fn push(&mut self, stamp: FrameStamp, payload: T) {
        if self.frames.len() == self.capacity {
            self.frames.pop_front();
        }
        self.frames.push_back((stamp, payload));
        while self.frames.front().is_some_and(|(s, _)| s.t < stamp.t - self.span) {
            self.frames.pop_front();
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn newest(&self) -> Option<&(FrameStamp, T)> {
        self.frames.back()
    }

    /// Frames with `t >= since`, oldest first.
    pub fn snapshot_since(&self, since: f64) -> Vec<(FrameStamp, T)> {
        self.frames.iter().filter(|(s, _)| s.t >= since).cloned().collect()
    }
}

#[derive(Debug, Error)]
#[error("{0}")]
pub struct SinkError(pub String);

/// Destination for finished events. Called from the recorder stage only.
pub trait EventSink: Send {
    fn persist(&mut self, event: &NearCrashEvent) -> Result<(), SinkError>;
}

/// Keeps events in memory only.
#[derive(Debug, Default)]
pub struct MemorySink;

impl EventSink for MemorySink {
    fn persist(&mut self, _event: &NearCrashEvent) -> Result<(), SinkError> {
        Ok(())
    }
}

/// Appends one JSON object per event to a file as soon as the event closes.
#[derive(Debug)]
pub struct JsonlFileSink {
    path: PathBuf,
}

impl JsonlFileSink {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }
}

impl EventSink for JsonlFileSink {
    fn persist(&mut self, event: &NearCrashEvent) -> Result<(), SinkError> {
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| SinkError(format!("{}: {e}", self.path.display())))?;
        let line = serde_json::to_string(event).map_err(|e| SinkError(e.to_string()))?;
        writeln!(file, "{line}").map_err(|e| SinkError(e.to_string()))
    }
}

impl<S: EventSink + ?Sized> EventSink for Box<S> {
    fn persist(&mut self, event: &NearCrashEvent) -> Result<(), SinkError> {
        (**self).persist(event)
    }
}

/// An event whose post-trigger window is still open.
#[derive(Debug, Clone)]
pub struct PendingEvent {
    pub event: NearCrashEvent,
    pub post_until: f64,
}

impl PendingEvent {
    /// Opens an event from the context available at trigger time. The clip
    /// start is clamped to the first frame of the stream.
    pub fn open(mut event: NearCrashEvent, pre_frames: &[FrameStamp], stream_start: f64, pre: f64, post: f64) -> Self {
        event.clip_start = (event.trigger_time - pre).max(stream_start);
        event.clip_end = event.trigger_time + post;
        event.frame_ids = pre_frames.iter().filter(|s| s.t >= event.clip_start).map(|s| s.frame_id).collect();
        event.truncated = false;
        let post_until = event.clip_end;
        Self { event, post_until }
    }
}

#[derive(Debug)]
pub enum RecorderMsg {
    Frame(FrameStamp),
    Trigger(Box<PendingEvent>),
}

#[derive(Debug, Default)]
pub struct RecorderOutput {
    pub events: Vec<NearCrashEvent>,
    /// Events kept in memory because the sink refused them.
    pub persist_failures: Vec<(u64, String)>,
}

/// Collects post-trigger frames and finalizes events.
pub struct Recorder<S> {
    sink: S,
    pending: Vec<PendingEvent>,
    last_t: Option<f64>,
    out: RecorderOutput,
}

impl<S: EventSink> Recorder<S> {
    pub fn new(sink: S) -> Self {
        Self { sink, pending: Vec::new(), last_t: None, out: RecorderOutput::default() }
    }

    pub fn handle(&mut self, msg: RecorderMsg) {
        match msg {
            RecorderMsg::Trigger(pending) => self.pending.push(*pending),
            RecorderMsg::Frame(stamp) => {
                self.last_t = Some(stamp.t);
                let mut closed = Vec::new();
                self.pending.retain_mut(|p| {
                    if stamp.t <= p.post_until {
                        if stamp.t > p.event.trigger_time {
                            p.event.frame_ids.push(stamp.frame_id);
                        }
                        true
                    } else {
                        closed.push(p.event.clone());
                        false
                    }
                });
                for event in closed {
                    self.finalize(event);
                }
            }
        }
    }

    fn finalize(&mut self, event: NearCrashEvent) {
        if let Err(e) = self.sink.persist(&event) {
            tracing::error!(event_id = event.event_id, "event persistence failed: {e}");
            self.out.persist_failures.push((event.event_id, e.0));
        }
        self.out.events.push(event);
    }

    /// Closes every open event at the end of the stream.
    pub fn finish(mut self) -> RecorderOutput {
        let end = self.last_t;
        for mut p in std::mem::take(&mut self.pending) {
            let stream_end = end.unwrap_or(p.event.trigger_time).max(p.event.trigger_time);
            if stream_end < p.post_until {
                p.event.clip_end = stream_end;
                p.event.truncated = true;
            }
            self.finalize(p.event);
        }
        self.out.events.sort_by_key(|e| e.event_id);
        self.out
    }
}
