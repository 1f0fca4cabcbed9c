//! Converts a synthetic raw GPS log, samples it and prints GeoJSON.

use nearcrash::gps::{self, GpsAffine, GpsFix};

fn main() {
    let affine = GpsAffine::default();
    // Heading north-east at roughly 15 m/s, one raw fix per second.
    let fixes: Vec<GpsFix> = (0..12)
        .map(|k| GpsFix::from_raw(k as f64, 10.0 + k as f64 * 8.1e-5, 20.0 + k as f64 * 8.1e-5, &affine).unwrap())
        .collect();
    let log = gps::sample_trajectory(&fixes, 3.0);
    for (fix, speed) in log.fixes.iter().skip(1).zip(&log.speeds) {
        println!("t={:4.1}  {:.6}, {:.6}  {speed:.2} m/s", fix.t, fix.lat_wgs84, fix.lon_wgs84);
    }
    let event = &fixes[7];
    let points = [(serde_json::json!({"kind": "near_crash", "time": event.t}), event.lat_wgs84, event.lon_wgs84)];
    println!("{}", serde_json::to_string_pretty(&gps::trajectory_geojson(&log, &points)).unwrap());
}
