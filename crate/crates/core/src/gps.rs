//! GPS fixes: raw-to-WGS84 conversion, periodic trajectory sampling, speed.

use std::io::Read;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GpsError {
    #[error("converted fix ({lat}, {lon}) is outside WGS84 bounds")]
    OutOfRange { lat: f64, lon: f64 },
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("fix timestamps must increase (from {from} to {to})")]
    NonIncreasingTime { from: f64, to: f64 },
}

/// Receiver-specific affine map from raw coordinates to WGS84 degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpsAffine {
    pub lat_scale: f64,
    pub lat_offset: f64,
    pub lon_scale: f64,
    pub lon_offset: f64,
}

impl Default for GpsAffine {
    fn default() -> Self {
        Self { lat_scale: 1.666, lat_offset: -31.30174, lon_scale: 1.666, lon_offset: 81.25186 }
    }
}

impl GpsAffine {
    pub fn apply(&self, lat_raw: f64, lon_raw: f64) -> (f64, f64) {
        (self.lat_scale * lat_raw + self.lat_offset, self.lon_scale * lon_raw + self.lon_offset)
    }

    pub fn invert(&self, lat: f64, lon: f64) -> (f64, f64) {
        ((lat - self.lat_offset) / self.lat_scale, (lon - self.lon_offset) / self.lon_scale)
    }

    pub fn convert(&self, lat_raw: f64, lon_raw: f64) -> Result<(f64, f64), GpsError> {
        if !lat_raw.is_finite() || !lon_raw.is_finite() {
            return Err(GpsError::NonFinite);
        }
        let (lat, lon) = self.apply(lat_raw, lon_raw);
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(GpsError::OutOfRange { lat, lon });
        }
        Ok((lat, lon))
    }
}

/// Converts with the default receiver constants.
pub fn convert_raw_to_wgs84(lat_raw: f64, lon_raw: f64) -> Result<(f64, f64), GpsError> {
    GpsAffine::default().convert(lat_raw, lon_raw)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpsFix {
    pub t: f64,
    pub lat_raw: f64,
    pub lon_raw: f64,
    pub lat_wgs84: f64,
    pub lon_wgs84: f64,
}

impl GpsFix {
    pub fn from_raw(t: f64, lat_raw: f64, lon_raw: f64, affine: &GpsAffine) -> Result<GpsFix, GpsError> {
        let (lat_wgs84, lon_wgs84) = affine.convert(lat_raw, lon_raw)?;
        Ok(GpsFix { t, lat_raw, lon_raw, lat_wgs84, lon_wgs84 })
    }
}

/// Great-circle distance in meters on a sphere of radius [`EARTH_RADIUS_M`].
pub fn haversine_m(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * a.sqrt().min(1.0).asin()
}

pub fn speed_between(a: &GpsFix, b: &GpsFix) -> Result<f64, GpsError> {
    if !(b.t > a.t) {
        return Err(GpsError::NonIncreasingTime { from: a.t, to: b.t });
    }
    Ok(haversine_m(a.lat_wgs84, a.lon_wgs84, b.lat_wgs84, b.lon_wgs84) / (b.t - a.t))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub fixes: Vec<GpsFix>,
    /// `speeds[i]` is the speed from `fixes[i]` to `fixes[i + 1]`.
    pub speeds: Vec<f64>,
}

/// Keeps the first fix, then each fix at least `period` seconds after the last kept one.
pub fn sample_trajectory<'a>(fixes: impl IntoIterator<Item = &'a GpsFix>, period: f64) -> TrajectoryLog {
    let mut kept: Vec<GpsFix> = Vec::new();
    for fix in fixes {
        match kept.last() {
            Some(last) if fix.t < last.t + period => {}
            _ => kept.push(*fix),
        }
    }
    let speeds = kept.windows(2).filter_map(|w| speed_between(&w[0], &w[1]).ok()).collect();
    TrajectoryLog { fixes: kept, speeds }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FixCsv {
    pub fixes: Vec<GpsFix>,
    /// `(1-based data row, reason)` for each skipped row.
    pub skipped: Vec<(usize, String)>,
}

/// Reads `t,lat_raw,lon_raw` rows. Malformed or out-of-range rows are skipped
/// and reported rather than failing the whole file.
pub fn read_fix_csv<R: Read>(input: R, affine: &GpsAffine) -> Result<FixCsv, csv::Error> {
    #[derive(Deserialize)]
    struct Row {
        t: f64,
        lat_raw: f64,
        lon_raw: f64,
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    reader.headers()?;
    let mut out = FixCsv::default();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let row_no = i + 1;
        match row {
            Ok(r) => match GpsFix::from_raw(r.t, r.lat_raw, r.lon_raw, affine) {
                Ok(fix) if out.fixes.last().is_none_or(|last| fix.t > last.t) => out.fixes.push(fix),
                Ok(fix) => out.skipped.push((row_no, format!("timestamp {} is not increasing", fix.t))),
                Err(e) => out.skipped.push((row_no, e.to_string())),
            },
            Err(e) => out.skipped.push((row_no, e.to_string())),
        }
    }
    for (row, reason) in &out.skipped {
        tracing::warn!(row, %reason, "skipping GPS row");
    }
    Ok(out)
}

/// `t,lat,lon,speed_mps`; the first row has no speed.
pub fn write_trajectory_csv<W: std::io::Write>(out: W, log: &TrajectoryLog) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "lat", "lon", "speed_mps"])?;
    for (i, fix) in log.fixes.iter().enumerate() {
        let speed = if i == 0 { String::new() } else { log.speeds.get(i - 1).map(|s| s.to_string()).unwrap_or_default() };
        w.write_record([fix.t.to_string(), fix.lat_wgs84.to_string(), fix.lon_wgs84.to_string(), speed])?;
    }
    w.flush()?;
    Ok(())
}

/// GeoJSON FeatureCollection with the trajectory as a LineString plus one
/// Point per supplied `(properties, lat, lon)` marker.
pub fn trajectory_geojson(log: &TrajectoryLog, points: &[(Value, f64, f64)]) -> Value {
    let mut features = Vec::new();
    if !log.fixes.is_empty() {
        let coords: Vec<Value> = log.fixes.iter().map(|f| json!([f.lon_wgs84, f.lat_wgs84])).collect();
        let times: Vec<f64> = log.fixes.iter().map(|f| f.t).collect();
        features.push(json!({
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": coords},
            "properties": {"kind": "trajectory", "times": times, "speeds_mps": log.speeds},
        }));
    }
    for (props, lat, lon) in points {
        features.push(json!({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [lon, lat]},
            "properties": props,
        }));
    }
    json!({"type": "FeatureCollection", "features": features})
}

/// Time-ordered fixes with a cursor that yields the newest fix at or before a time.
#[derive(Debug, Clone, Default)]
pub struct GpsFeed {
    fixes: Vec<GpsFix>,
    cursor: usize,
}

impl GpsFeed {
    pub fn new(mut fixes: Vec<GpsFix>) -> Self {
        fixes.sort_by(|a, b| a.t.total_cmp(&b.t));
        Self { fixes, cursor: 0 }
    }

    /// Latest fix with `fix.t <= t`. Queries must not go back in time.
    pub fn latest_at(&mut self, t: f64) -> Option<GpsFix> {
        while self.cursor < self.fixes.len() && self.fixes[self.cursor].t <= t {
            self.cursor += 1;
        }
        self.cursor.checked_sub(1).map(|i| self.fixes[i])
    }

    pub fn fixes(&self) -> &[GpsFix] {
        &self.fixes
    }
}
