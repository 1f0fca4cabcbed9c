//! Near-crash detection from timestamped bounding-box streams.
//!
//! Detections are tracked into road users, each track's box height, width and
//! center are regressed over short sliding windows, and two rules on the
//! resulting time-to-collision and horizontal-motion estimates decide whether a
//! near-crash is happening. No camera calibration is needed: the TTC estimate
//! is a ratio of image quantities.
//!
//! Modules:
//! - [`sim`]: pinhole scenario simulator with analytic TTC and labels
//! - [`tracker`]: SORT-style multi-object tracking
//! - [`ttc`]: sliding-window regressions
//! - [`rules`]: the size and motion rules
//! - [`pipeline`]: the concurrent runtime and event recorder
//! - [`gps`]: GPS conversion, trajectory sampling and export
//! - [`eval`]: event matching and F1 scoring

// NaN must fail validation, so `!(x > 0.0)` is intentional.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod eval;
pub mod gps;
pub mod pipeline;
pub mod rules;
pub mod scenarios;
pub mod sim;
pub mod stream;
pub mod tracker;
pub mod ttc;
pub mod types;

pub use config::EngineConfig;
pub use types::{iou, BBox, Detection, FrameRecord, ObjectClass};
