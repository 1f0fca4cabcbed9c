//! Evaluates the size and motion rules for a few hand-picked target states.

use nearcrash::rules::{check_motion_rule, check_size_rule, FrameGeometry, RuleConfig};
use nearcrash::ttc::{MotionEstimate, TtcEstimate};

fn main() {
    let cfg = RuleConfig::default();
    let geometry = FrameGeometry::new(1280.0, 720.0);
    // (label, ttc_h, ttc_w, omega, cx, by)
    let cases = [
        ("closing, centred", 2.0, 3.0, 0.02, 660.0, 600.0),
        ("closing, drifting out", 2.0, 3.0, 0.6, 1000.0, 600.0),
        ("far away", 5.0, 7.0, 0.0, 640.0, 420.0),
        ("height grows, width shrinks", 1.5, -4.0, -0.1, 300.0, 700.0),
        ("crossing toward the centre", 2.5, 4.0, -0.5, 950.0, 560.0),
    ];
    for (label, h, w, omega, cx, by) in cases {
        let est = TtcEstimate { ttc_h: Some(h), ttc_w: Some(w), slope_h: 1.0, slope_w: 1.0 };
        let size = check_size_rule(&est, &cfg);
        let (motion, product) = check_motion_rule(&MotionEstimate { omega, n: 18 }, cx, by, &geometry, &cfg);
        println!("{label:30} size={size:5} motion={motion:5} (product {product:+.3}) -> {}", if size && motion { "NEAR-CRASH" } else { "-" });
    }
}
