use nearcrash::rules::{check_motion_rule, check_size_rule, FrameGeometry, RuleConfig, RuleEngine};
use nearcrash::sim::{self, ActorSpec, CameraSpec};
use nearcrash::ttc::{fit_slope, horizontal_motion, ttc_from_window, EstimatorConfig, MotionEstimate, Sample, SampleWindow, TtcEstimate};
use nearcrash::ObjectClass;
use proptest::prelude::*;

const FPS: f64 = 24.0;

fn approaching(d0: f64, v: f64, x0: f64, v_lat: f64) -> ActorSpec {
    ActorSpec {
        class: ObjectClass::Vehicle,
        real_height: 1.5,
        real_width: 1.8,
        init_longitudinal: d0,
        init_lateral: x0,
        vel_longitudinal: v,
        vel_lateral: v_lat,
        collision_half_width: 1.8,
    }
}

/// Window of the last `n` projected samples ending at frame `end`.
fn window_at(actor: &ActorSpec, camera: &CameraSpec, end: usize, n: usize) -> SampleWindow {
    let mut w = SampleWindow::new(n);
    for k in end + 1 - n..=end {
        let t = k as f64 / camera.fps;
        let b = sim::project_actor(actor, t, camera).expect("visible");
        w.push(Sample { t, h: b.height(), w: b.width(), cx: b.center_x(), by: b.bottom() }).unwrap();
    }
    w
}

#[test]
fn noise_free_ttc_within_five_percent() {
    let camera = CameraSpec::new(1000.0, 1280.0, 720.0, FPS);
    let cfg = EstimatorConfig::default();
    for v in [5.0, 10.0, 15.0] {
        let actor = approaching(6.0 * v, v, 0.0, 0.0);
        for k in cfg.size_window_len..(5.0 * FPS) as usize {
            let t = k as f64 / FPS;
            let truth = sim::true_ttc(&actor, t).unwrap();
            if !(1.0..=5.0).contains(&truth) {
                continue;
            }
            let w = window_at(&actor, &camera, k, cfg.size_window_len);
            let est = ttc_from_window(&w, cfg.size_window_len, cfg.slope_epsilon).unwrap();
            let h = est.ttc_h.unwrap();
            assert!((h - truth).abs() / truth <= 0.05, "v={v} t={t}: {h} vs {truth}");
        }
    }
}

#[test]
fn slope_tracks_analytic_derivative() {
    let camera = CameraSpec::new(1000.0, 1280.0, 720.0, FPS);
    let actor = approaching(40.0, 10.0, 0.0, 0.0);
    let n = 12;
    for end in [30usize, 50, 70] {
        let w = window_at(&actor, &camera, end, n);
        let fit = fit_slope(w.iter().map(|s| (s.t, s.h))).unwrap();
        let t_mid = (end as f64 - (n as f64 - 1.0) / 2.0) / FPS;
        let d = actor.longitudinal_at(t_mid);
        let analytic = camera.focal_px * actor.real_height * actor.vel_longitudinal / (d * d);
        assert!((fit.slope - analytic).abs() / analytic <= 0.05, "end {end}: {} vs {analytic}", fit.slope);
    }
}

#[test]
fn focal_length_does_not_change_ttc() {
    let actor = approaching(30.0, 8.0, 0.5, 0.0);
    let n = EstimatorConfig::default().size_window_len;
    let reference = {
        let camera = CameraSpec::new(1000.0, 1280.0, 720.0, FPS);
        ttc_from_window(&window_at(&actor, &camera, 40, n), n, 1e-3).unwrap()
    };
    for f in [500.0, 2000.0] {
        let camera = CameraSpec::new(f, 1280.0, 720.0, FPS);
        let est = ttc_from_window(&window_at(&actor, &camera, 40, n), n, 1e-3).unwrap();
        let (a, b) = (est.ttc_h.unwrap(), reference.ttc_h.unwrap());
        assert!((a - b).abs() / b < 1e-9, "f={f}: {a} vs {b}");
    }
}

#[test]
fn pure_lateral_drift_gives_expected_omega() {
    let mut w = SampleWindow::new(18);
    for k in 0..18 {
        let t = k as f64 / FPS;
        w.push(Sample { t, h: 100.0, w: 120.0, cx: 640.0 + 128.0 * t, by: 500.0 }).unwrap();
    }
    let m = horizontal_motion(&w, 18, 640.0, 1280.0).unwrap();
    assert!((m.omega - 0.2).abs() < 1e-12, "{}", m.omega);
}

#[test]
fn mirrored_motion_negates_omega() {
    let camera = CameraSpec::new(1000.0, 1280.0, 720.0, FPS);
    let actor = approaching(25.0, 5.0, 2.0, -0.8);
    let n = 18;
    let m = horizontal_motion(&window_at(&actor, &camera, 30, n), n, 640.0, 1280.0).unwrap();
    let mm = horizontal_motion(&window_at(&actor.mirrored(), &camera, 30, n), n, 640.0, 1280.0).unwrap();
    assert!((m.omega + mm.omega).abs() < 1e-12);
}

fn estimate(h: Option<f64>, w: Option<f64>) -> TtcEstimate {
    TtcEstimate { ttc_h: h, ttc_w: w, slope_h: 1.0, slope_w: 1.0 }
}

proptest! {
    #[test]
    fn size_rule_needs_height_ttc_in_range(h in -20.0..20.0f64, w in 0.01..5.0f64) {
        let cfg = RuleConfig::default();
        let pass = check_size_rule(&estimate(Some(h), Some(w)), &cfg);
        if h <= 0.0 || h >= cfg.delta {
            prop_assert!(!pass);
        } else {
            prop_assert!(pass);
        }
    }

    #[test]
    fn motion_rule_is_mirror_invariant(omega in -2.0..2.0f64, cx in 0.0..1280.0f64, by in 0.0..720.0f64) {
        let g = FrameGeometry::new(1280.0, 720.0);
        let cfg = RuleConfig::default();
        let m = MotionEstimate { omega, n: 18 };
        let mm = MotionEstimate { omega: -omega, n: 18 };
        let (a, pa) = check_motion_rule(&m, cx, by, &g, &cfg);
        let (b, pb) = check_motion_rule(&mm, 1280.0 - cx, by, &g, &cfg);
        prop_assert!((pa - pb).abs() < 1e-12);
        // Products exactly on a threshold may round either way.
        if (pa - cfg.alpha).abs() > 1e-9 && (pa - cfg.beta).abs() > 1e-9 {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn motion_rule_is_resolution_invariant(omega in -2.0..2.0f64, u in 0.0..1.0f64, v in 0.0..1.0f64) {
        let cfg = RuleConfig::default();
        let m = MotionEstimate { omega, n: 18 };
        let (_, p1) = check_motion_rule(&m, u * 1280.0, v * 720.0, &FrameGeometry::new(1280.0, 720.0), &cfg);
        let (_, p2) = check_motion_rule(&m, u * 1920.0, v * 1080.0, &FrameGeometry::new(1920.0, 1080.0), &cfg);
        prop_assert!((p1 - p2).abs() < 1e-12);
    }
}

#[test]
fn missing_estimates_never_trigger() {
    let mut engine = RuleEngine::new(RuleConfig::default());
    let g = FrameGeometry::new(1280.0, 720.0);
    let m = MotionEstimate { omega: 0.0, n: 18 };
    assert!(!engine.decide(1, None, Some(m), (640.0, 700.0), &g, 0.0).triggered);
    assert!(!engine.decide(1, Some(estimate(Some(1.0), Some(2.0))), None, (640.0, 700.0), &g, 0.0).triggered);
    assert!(engine.decide(1, Some(estimate(Some(1.0), Some(2.0))), Some(m), (640.0, 700.0), &g, 0.0).triggered);
}
