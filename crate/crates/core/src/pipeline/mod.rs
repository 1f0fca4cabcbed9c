//! Three-stage runtime: frame source, processor and event recorder.
//!
//! The source hands frames to the processor either losslessly (offline) or
//! through a latest-wins slot (live). The processor owns all tracker and rule
//! state. Finished frames and trigger snapshots go to the recorder over an
//! unbounded channel, so a slow recorder never stalls processing.

pub mod engine;
pub mod queue;
pub mod recorder;

use std::fmt::Display;
use std::sync::mpsc;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::config::{EngineConfig, Mode};
use crate::gps::{sample_trajectory, GpsFeed, TrajectoryLog};
use crate::types::FrameRecord;

pub use engine::{Engine, FrameAnnotation, TrackAnnotation, Trigger};
pub use queue::{LatestQueue, LatestSlot, QueueStats};
pub use recorder::{
    ContextBuffer, EventGps, EventSink, FrameStamp, JsonlFileSink, MemorySink, NearCrashEvent, PendingEvent, Recorder,
    RecorderMsg, RecorderOutput, SinkError,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub frames_produced: u64,
    pub frames_processed: u64,
    pub frames_dropped: u64,
    /// Frames refused by the tracker (timestamp not increasing).
    pub frames_rejected: u64,
    pub achieved_fps: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    SourceFailed(String),
}

#[derive(Debug)]
pub struct RunOutput {
    pub events: Vec<NearCrashEvent>,
    pub trajectory: TrajectoryLog,
    pub report: ThroughputReport,
    pub status: RunStatus,
    pub annotations: Option<Vec<FrameAnnotation>>,
    pub persist_failures: Vec<(u64, String)>,
    /// Wall-clock instant at which the processor finished each frame.
    pub processed_at: Vec<Instant>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub collect_annotations: bool,
}

struct Processor {
    engine: Engine,
    context: ContextBuffer<()>,
    gps: Option<GpsFeed>,
    stream_start: Option<f64>,
    next_event_id: u64,
    pre: f64,
    post: f64,
    consumer_delay: Duration,
    to_recorder: mpsc::Sender<RecorderMsg>,
    annotations: Option<Vec<FrameAnnotation>>,
    processed: u64,
    rejected: u64,
    processed_at: Vec<Instant>,
}

impl Processor {
    fn handle(&mut self, frame: FrameRecord) {
        if !self.consumer_delay.is_zero() {
            std::thread::sleep(self.consumer_delay);
        }
        let (annotation, triggers) = match self.engine.process(&frame) {
            Ok(out) => out,
            Err(e) => {
                tracing::warn!(frame_id = frame.frame_id, "rejected frame: {e}");
                self.rejected += 1;
                return;
            }
        };
        self.processed += 1;
        let start = *self.stream_start.get_or_insert(frame.t);
        let stamp = FrameStamp { frame_id: frame.frame_id, t: frame.t };
        self.context.push(stamp, ());
        let fix = self.gps.as_mut().and_then(|g| g.latest_at(frame.t));
        // Recorder failures are not the processor's concern; a closed
        // channel only means the recorder is gone.
        let _ = self.to_recorder.send(RecorderMsg::Frame(stamp));
        if !triggers.is_empty() {
            let pre_frames: Vec<FrameStamp> =
                self.context.snapshot_since(frame.t - self.pre).into_iter().map(|(s, _)| s).collect();
            for trig in triggers {
                let a = &trig.annotation;
                let event = NearCrashEvent {
                    event_id: self.next_event_id,
                    track_id: a.track_id,
                    event_type: trig.event_type,
                    trigger_time: trig.t,
                    trigger_frame_id: trig.frame_id,
                    ttc_h: a.ttc_h.unwrap_or(f64::NAN),
                    ttc_w: a.ttc_w.unwrap_or(f64::NAN),
                    omega: a.omega.unwrap_or(f64::NAN),
                    motion_product: a.motion_product.unwrap_or(f64::NAN),
                    size_rule_pass: a.size_rule_pass,
                    motion_rule_pass: a.motion_rule_pass,
                    gps: fix.as_ref().map(EventGps::from),
                    clip_start: 0.0,
                    clip_end: 0.0,
                    frame_ids: Vec::new(),
                    truncated: false,
                };
                self.next_event_id += 1;
                let pending = PendingEvent::open(event, &pre_frames, start, self.pre, self.post);
                let _ = self.to_recorder.send(RecorderMsg::Trigger(Box::new(pending)));
            }
        }
        if let Some(store) = self.annotations.as_mut() {
            store.push(annotation);
        }
        self.processed_at.push(Instant::now());
    }
}

/// Runs the whole pipeline over `source` until it ends or fails.
///
/// Frame timestamps always come from the source. In live mode with a non-zero
/// `live_replay_speed`, the source stage paces frames by their timestamps.
pub fn run<I, E, K>(source: I, cfg: &EngineConfig, gps: Option<GpsFeed>, sink: K, opts: RunOptions) -> RunOutput
where
    I: Iterator<Item = Result<FrameRecord, E>> + Send,
    E: Display,
    K: EventSink,
{
    let pcfg = cfg.pipeline;
    let trajectory = gps.as_ref().map(|g| sample_trajectory(g.fixes(), cfg.gps.sample_period)).unwrap_or_default();
    let (to_recorder, recorder_rx) = mpsc::channel::<RecorderMsg>();
    let mut processor = Processor {
        engine: Engine::new(cfg),
        context: ContextBuffer::new(pcfg.context_capacity(), pcfg.pre_seconds),
        gps,
        stream_start: None,
        next_event_id: 1,
        pre: pcfg.pre_seconds,
        post: pcfg.post_seconds,
        consumer_delay: Duration::from_millis(pcfg.consumer_delay_ms),
        to_recorder,
        annotations: opts.collect_annotations.then(Vec::new),
        processed: 0,
        rejected: 0,
        processed_at: Vec::new(),
    };

    let started = Instant::now();
    let (recorder_out, produced, dropped, source_error) = std::thread::scope(|scope| {
        let recorder = scope.spawn(move || {
            let mut rec = Recorder::new(sink);
            for msg in recorder_rx {
                rec.handle(msg);
            }
            rec.finish()
        });

        let (produced, dropped, source_error) = match pcfg.mode {
            Mode::Offline => {
                let (tx, rx) = mpsc::sync_channel::<Result<FrameRecord, String>>(pcfg.offline_queue);
                let producer = scope.spawn(move || {
                    let mut produced = 0u64;
                    for item in source {
                        let item = item.map_err(|e| e.to_string());
                        let failed = item.is_err();
                        if item.is_ok() {
                            produced += 1;
                        }
                        if tx.send(item).is_err() || failed {
                            break;
                        }
                    }
                    produced
                });
                let mut source_error = None;
                for item in rx {
                    match item {
                        Ok(frame) => processor.handle(frame),
                        Err(e) => {
                            source_error = Some(e);
                            break;
                        }
                    }
                }
                let produced = producer.join().expect("source stage panicked");
                (produced, 0, source_error)
            }
            Mode::Live => {
                let slot = Arc::new(LatestSlot::<FrameRecord>::new());
                let producer_slot = Arc::clone(&slot);
                let speed = pcfg.live_replay_speed;
                scope.spawn(move || {
                    let clock = Instant::now();
                    let mut t0 = None;
                    for item in source {
                        match item {
                            Ok(frame) => {
                                if speed > 0.0 {
                                    let base = *t0.get_or_insert(frame.t);
                                    let due = Duration::from_secs_f64(((frame.t - base) / speed).max(0.0));
                                    if let Some(wait) = due.checked_sub(clock.elapsed()) {
                                        std::thread::sleep(wait);
                                    }
                                }
                                producer_slot.push(frame);
                            }
                            Err(e) => {
                                producer_slot.close(Some(e.to_string()));
                                return;
                            }
                        }
                    }
                    producer_slot.close(None);
                });
                while let Some(frame) = slot.recv() {
                    processor.handle(frame);
                }
                let stats = slot.stats();
                (stats.produced, stats.dropped, slot.error())
            }
        };
        let annotations = processor.annotations.take();
        let processed_at = std::mem::take(&mut processor.processed_at);
        let counts = (processor.processed, processor.rejected);
        drop(processor);
        let recorder_out = recorder.join().expect("recorder stage panicked");
        ((recorder_out, annotations, processed_at, counts), produced, dropped, source_error)
    });
    let (recorder_out, annotations, processed_at, (processed, rejected)) = recorder_out;
    let wall_seconds = started.elapsed().as_secs_f64();

    RunOutput {
        events: recorder_out.events,
        trajectory,
        report: ThroughputReport {
            frames_produced: produced,
            frames_processed: processed,
            frames_dropped: dropped,
            frames_rejected: rejected,
            achieved_fps: if wall_seconds > 0.0 { processed as f64 / wall_seconds } else { 0.0 },
            wall_seconds,
        },
        status: source_error.map_or(RunStatus::Completed, RunStatus::SourceFailed),
        annotations,
        persist_failures: recorder_out.persist_failures,
        processed_at,
    }
}

/// Offline convenience: runs an in-memory frame list with an in-memory sink.
pub fn run_frames(frames: &[FrameRecord], cfg: &EngineConfig, gps: Option<GpsFeed>) -> RunOutput {
    let mut cfg = *cfg;
    cfg.pipeline.mode = Mode::Offline;
    run(frames.iter().cloned().map(Ok::<_, std::convert::Infallible>), &cfg, gps, MemorySink, RunOptions::default())
}
