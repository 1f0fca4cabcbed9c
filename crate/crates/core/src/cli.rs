//! Command-line front end: `simulate`, `run`, `eval`, `gps` and `report`.
//!
//! Exit codes: 0 success, 2 input error, 3 runtime error.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Arg, ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{EngineConfig, Mode};
use crate::eval::{self, EvalReport, TimedEvent};
use crate::gps::{read_fix_csv, sample_trajectory, trajectory_geojson, write_trajectory_csv, GpsAffine, GpsFeed};
use crate::pipeline::{self, JsonlFileSink, NearCrashEvent, RunOptions, RunStatus, ThroughputReport};
use crate::scenarios;
use crate::sim::{self, ScenarioSpec};
use crate::stream::{self, JsonlFrames};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "nearcrash", version, about = "Near-crash detection from bounding-box streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a scenario into a detection stream and ground-truth labels.
    Simulate(SimulateArgs),
    /// Run the detection pipeline over a detection stream.
    Run(RunArgs),
    /// Score predicted events against ground truth.
    Eval(EvalArgs),
    /// Convert raw GPS fixes into a trajectory CSV and GeoJSON.
    Gps(GpsArgs),
    /// Render an evaluation report as a table.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Scenario JSON file.
    #[arg(long, conflicts_with = "bundled", required_unless_present = "bundled")]
    scenario: Option<PathBuf>,
    /// Name of a bundled scenario instead of a file.
    #[arg(long)]
    bundled: Option<String>,
    #[arg(long)]
    out_detections: PathBuf,
    #[arg(long)]
    out_labels: PathBuf,
    /// TTC threshold used for labeling, in seconds.
    #[arg(long, default_value_t = 3.0)]
    delta: f64,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Detection stream (JSON Lines); `-` reads standard input.
    #[arg(long)]
    detections: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// GPS fixes as CSV `t,lat_raw,lon_raw`.
    #[arg(long)]
    gps: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
    /// Shorthand for `--pipeline.mode`.
    #[arg(long, value_parser = ["offline", "live"])]
    mode: Option<String>,
    /// Write per-frame track annotations to `annotations.jsonl`.
    #[arg(long)]
    debug_annotations: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// JSON array of `{video_id, time}` or an event log from `run`.
    #[arg(long)]
    predictions: PathBuf,
    /// JSON array of `{video_id, time}`.
    #[arg(long)]
    ground_truth: PathBuf,
    /// Video id for predictions that carry none (default: file stem).
    #[arg(long)]
    video_id: Option<String>,
    #[arg(long, default_value_t = eval::DEFAULT_MATCH_WINDOW)]
    window: f64,
    /// Override the number of videos in the report.
    #[arg(long)]
    videos: Option<usize>,
    /// Throughput report from `run`, for the FPS column.
    #[arg(long)]
    throughput: Option<PathBuf>,
    /// Where to write the report JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GpsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out_geojson: PathBuf,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    /// Event log whose GPS locations are added as points.
    #[arg(long)]
    events: Option<PathBuf>,
    #[arg(long, default_value_t = 3.0)]
    period: f64,
    /// Engine config supplying the affine constants.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// One or more EvalReport JSON files.
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    #[arg(long)]
    throughput: Option<PathBuf>,
}

fn command() -> clap::Command {
    Cli::command().mut_subcommand("run", |mut sub| {
        for path in EngineConfig::dotted_paths() {
            sub = sub.arg(
                Arg::new(path.clone())
                    .long(path)
                    .value_name("VALUE")
                    .allow_negative_numbers(true)
                    .help_heading("Config overrides")
                    .required(false),
            );
        }
        sub
    })
}

/// Parses `args` (including the program name) and runs the command. Returns
/// the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INPUT,
            };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return EXIT_INPUT;
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Run(a) => {
            let sub = matches.subcommand_matches("run").expect("run matches");
            cmd_run(&a, sub)
        }
        Command::Eval(a) => cmd_eval(&a),
        Command::Gps(a) => cmd_gps(&a),
        Command::Report(a) => cmd_report(&a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("nearcrash: {e}");
            e.exit_code()
        }
    }
}

pub fn main_with_args() -> i32 {
    run_cli(std::env::args_os())
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| input(format!("{}: line {} column {}: {e}", path.display(), e.line(), e.column())))
}

/// Writes via a sibling temporary file and a rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = tmp_path(path);
    fs::write(&tmp, bytes).map_err(|e| runtime(format!("{}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(OsString::from).unwrap_or_default();
    name.push(".tmp");
    path.with_file_name(name)
}

fn load_scenario(a: &SimulateArgs) -> Result<ScenarioSpec, CliError> {
    let scenario = match (&a.scenario, &a.bundled) {
        (Some(path), _) => {
            let text = read_text(path)?;
            ScenarioSpec::from_json(&text)
                .map_err(|e| input(format!("{}: line {} column {}: {e}", path.display(), e.line(), e.column())))?
        }
        (None, Some(name)) => scenarios::by_name(name).ok_or_else(|| {
            let names: Vec<&str> = scenarios::BUNDLED.iter().map(|(n, _)| *n).collect();
            input(format!("unknown bundled scenario `{name}` (available: {})", names.join(", ")))
        })?,
        (None, None) => return Err(input("either --scenario or --bundled is required")),
    };
    scenario.validate().map_err(input)?;
    Ok(scenario)
}

fn cmd_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    if !(a.delta > 0.0) {
        return Err(input("--delta must be > 0"));
    }
    let scenario = load_scenario(a)?;
    let stream = sim::generate_detections(&scenario).map_err(input)?;
    let video_id = if scenario.name.is_empty() { "scenario".to_string() } else { scenario.name.clone() };
    let labels: Vec<Value> = sim::label_ground_truth_events(&scenario, a.delta)
        .into_iter()
        .map(|l| json!({"video_id": video_id, "time": l.time, "actor": l.actor}))
        .collect();

    let mut detections = Vec::new();
    stream::write_frames(&mut detections, &stream.frames).map_err(runtime)?;
    let labels = serde_json::to_vec_pretty(&labels).map_err(runtime)?;
    // Both outputs are staged before either is moved into place.
    let staged = [(tmp_path(&a.out_detections), &a.out_detections, detections), (tmp_path(&a.out_labels), &a.out_labels, labels)];
    for (tmp, _, bytes) in &staged {
        fs::write(tmp, bytes).map_err(|e| runtime(format!("{}: {e}", tmp.display())))?;
    }
    for (tmp, dest, _) in &staged {
        fs::rename(tmp, dest).map_err(|e| runtime(format!("{}: {e}", dest.display())))?;
    }
    eprintln!("wrote {} frames", stream.frames.len());
    Ok(())
}

fn load_config(path: Option<&Path>) -> Result<EngineConfig, CliError> {
    match path {
        Some(p) => EngineConfig::from_json(&read_text(p)?).map_err(|e| input(format!("{}: {e}", p.display()))),
        None => Ok(EngineConfig::default()),
    }
}

fn cmd_run(a: &RunArgs, sub: &ArgMatches) -> Result<(), CliError> {
    let mut cfg = load_config(a.config.as_deref())?;
    for path in EngineConfig::dotted_paths() {
        if let Some(raw) = sub.get_one::<String>(&path) {
            cfg.set_path(&path, raw).map_err(input)?;
        }
    }
    if let Some(mode) = &a.mode {
        cfg.set_path("pipeline.mode", mode).map_err(input)?;
    }
    cfg.validate().map_err(input)?;

    let gps = match &a.gps {
        Some(path) => {
            let file = File::open(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
            let parsed = read_fix_csv(file, &cfg.gps.affine).map_err(|e| input(format!("{}: {e}", path.display())))?;
            if !parsed.skipped.is_empty() {
                eprintln!("skipped {} malformed GPS rows", parsed.skipped.len());
            }
            Some(GpsFeed::new(parsed.fixes))
        }
        None => None,
    };

    fs::create_dir_all(&a.out_dir).map_err(|e| runtime(format!("{}: {e}", a.out_dir.display())))?;
    let persisted = a.out_dir.join("events.jsonl");
    if persisted.exists() {
        fs::remove_file(&persisted).map_err(runtime)?;
    }
    let sink = JsonlFileSink::new(&persisted);
    let opts = RunOptions { collect_annotations: a.debug_annotations };

    let output = if a.detections.as_os_str() == "-" {
        let frames = JsonlFrames::new(BufReader::new(io::stdin()));
        pipeline::run(frames, &cfg, gps, sink, opts)
    } else {
        let file = File::open(&a.detections).map_err(|e| input(format!("{}: {e}", a.detections.display())))?;
        pipeline::run(JsonlFrames::new(BufReader::new(file)), &cfg, gps, sink, opts)
    };

    write_run_outputs(&a.out_dir, &output.events, &output.report)?;
    if let Some(annotations) = &output.annotations {
        let file = File::create(a.out_dir.join("annotations.jsonl")).map_err(runtime)?;
        let mut w = BufWriter::new(file);
        for frame in annotations {
            serde_json::to_writer(&mut w, frame).map_err(runtime)?;
            w.write_all(b"\n").map_err(runtime)?;
        }
        w.flush().map_err(runtime)?;
    }
    if !output.trajectory.fixes.is_empty() || a.gps.is_some() {
        let mut csv_bytes = Vec::new();
        write_trajectory_csv(&mut csv_bytes, &output.trajectory).map_err(runtime)?;
        write_atomic(&a.out_dir.join("trajectory.csv"), &csv_bytes)?;
        let geo = trajectory_geojson(&output.trajectory, &event_points(&output.events));
        write_atomic(&a.out_dir.join("trajectory.geojson"), &serde_json::to_vec_pretty(&geo).map_err(runtime)?)?;
    }
    for (id, reason) in &output.persist_failures {
        eprintln!("event {id} was not persisted to {}: {reason}", persisted.display());
    }
    let r = &output.report;
    eprintln!(
        "{} events; {} frames processed, {} dropped, {:.1} fps",
        output.events.len(),
        r.frames_processed,
        r.frames_dropped,
        r.achieved_fps
    );
    match output.status {
        RunStatus::Completed => Ok(()),
        RunStatus::SourceFailed(msg) => Err(input(format!("detection stream: {msg} (partial outputs written)"))),
    }
}

fn write_run_outputs(dir: &Path, events: &[NearCrashEvent], report: &ThroughputReport) -> Result<(), CliError> {
    write_atomic(&dir.join("events.json"), &serde_json::to_vec_pretty(events).map_err(runtime)?)?;
    write_atomic(&dir.join("throughput.json"), &serde_json::to_vec_pretty(report).map_err(runtime)?)
}

fn event_points(events: &[NearCrashEvent]) -> Vec<(Value, f64, f64)> {
    events
        .iter()
        .filter_map(|e| {
            let g = e.gps?;
            Some((
                json!({"kind": "near_crash", "event_id": e.event_id, "event_type": e.event_type, "time": e.trigger_time,
                       "ttc_h": e.ttc_h, "ttc_w": e.ttc_w}),
                g.lat,
                g.lon,
            ))
        })
        .collect()
}

/// Accepts `{video_id, time}` records or event-log entries with `trigger_time`.
fn parse_timed_events(value: &Value, default_video: &str, path: &Path) -> Result<Vec<TimedEvent>, CliError> {
    let items = value.as_array().ok_or_else(|| input(format!("{}: expected a JSON array", path.display())))?;
    items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let time = item
                .get("time")
                .or_else(|| item.get("trigger_time"))
                .and_then(Value::as_f64)
                .ok_or_else(|| input(format!("{}: [{i}]: missing numeric `time`", path.display())))?;
            let video_id = match item.get("video_id") {
                Some(Value::String(s)) => s.clone(),
                Some(other) => return Err(input(format!("{}: [{i}].video_id: expected a string, got {other}", path.display()))),
                None => default_video.to_string(),
            };
            Ok(TimedEvent { video_id, time })
        })
        .collect()
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn read_fps(path: Option<&Path>) -> Result<Option<f64>, CliError> {
    let Some(path) = path else { return Ok(None) };
    let report: ThroughputReport = serde_json::from_value(read_json(path)?).map_err(|e| input(format!("{}: {e}", path.display())))?;
    Ok(Some(report.achieved_fps))
}

fn cmd_eval(a: &EvalArgs) -> Result<(), CliError> {
    let default_video = a.video_id.clone().unwrap_or_else(|| file_stem(&a.predictions));
    let predictions = parse_timed_events(&read_json(&a.predictions)?, &default_video, &a.predictions)?;
    let gt_default = a.video_id.clone().unwrap_or_else(|| file_stem(&a.ground_truth));
    let ground_truth = parse_timed_events(&read_json(&a.ground_truth)?, &gt_default, &a.ground_truth)?;
    let fps = read_fps(a.throughput.as_deref())?;
    let (report, _) = eval::report(&predictions, &ground_truth, a.window, a.videos, fps);
    print!("{}", report.render_table());
    let text = serde_json::to_vec_pretty(&report).map_err(runtime)?;
    match &a.out {
        Some(path) => write_atomic(path, &text)?,
        None => println!("{}", String::from_utf8_lossy(&text)),
    }
    Ok(())
}

fn cmd_gps(a: &GpsArgs) -> Result<(), CliError> {
    if !(a.period > 0.0) {
        return Err(input("--period must be > 0"));
    }
    let affine: GpsAffine = load_config(a.config.as_deref())?.gps.affine;
    let file = File::open(&a.input).map_err(|e| input(format!("{}: {e}", a.input.display())))?;
    let parsed = read_fix_csv(file, &affine).map_err(|e| input(format!("{}: {e}", a.input.display())))?;
    let events: Vec<NearCrashEvent> = match &a.events {
        Some(path) => serde_json::from_value(read_json(path)?).map_err(|e| input(format!("{}: {e}", path.display())))?,
        None => Vec::new(),
    };
    let log = sample_trajectory(&parsed.fixes, a.period);
    let geo = trajectory_geojson(&log, &event_points(&events));
    write_atomic(&a.out_geojson, &serde_json::to_vec_pretty(&geo).map_err(runtime)?)?;
    if let Some(path) = &a.out_csv {
        let mut bytes = Vec::new();
        write_trajectory_csv(&mut bytes, &log).map_err(runtime)?;
        write_atomic(path, &bytes)?;
    }
    eprintln!("{} fixes read, {} kept, {} rows skipped", parsed.fixes.len(), log.fixes.len(), parsed.skipped.len());
    Ok(())
}

fn cmd_report(a: &ReportArgs) -> Result<(), CliError> {
    let fps = read_fps(a.throughput.as_deref())?;
    for path in &a.reports {
        let mut report: EvalReport =
            serde_json::from_value(read_json(path)?).map_err(|e| input(format!("{}: {e}", path.display())))?;
        if fps.is_some() {
            report.fps = fps;
        }
        if a.reports.len() > 1 {
            println!("{}", path.display());
        }
        print!("{}", report.render_table());
    }
    Ok(())
}

/// The mode a run would use after applying `--mode`; exposed for tests.
pub fn parse_mode(raw: &str) -> Option<Mode> {
    serde_json::from_value(Value::String(raw.to_string())).ok()
}
