//! Sliding-window least-squares estimators for time to collision and
//! horizontal motion.
//!
//! Time to collision is the fitted box size divided by the fitted size-change
//! rate. Both come from the same regression line, so the ratio does not depend
//! on focal length or image resolution.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum FitError {
    #[error("regression needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("regression timestamps have zero variance")]
    DegenerateTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum WindowError {
    #[error("sample at t={t} does not follow previous t={last}")]
    NonIncreasingTime { t: f64, last: f64 },
    #[error("sample sizes must be positive and finite")]
    InvalidSize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    pub n: usize,
    /// Value of the fitted line at the newest timestamp.
    pub fitted_latest: f64,
    pub t_mean: f64,
    /// Value of the fitted line at `t_mean` (the sample mean).
    pub fitted_mean: f64,
    pub t_latest: f64,
}

/// Ordinary least squares of value on time. Timestamps are used as given, so
/// irregular frame spacing is handled.
pub fn fit_slope<I>(samples: I) -> Result<RegressionResult, FitError>
where
    I: IntoIterator<Item = (f64, f64)>,
    I::IntoIter: Clone,
{
    let iter = samples.into_iter();
    let (mut n, mut sum_t, mut sum_v, mut t_latest) = (0usize, 0.0, 0.0, f64::NEG_INFINITY);
    for (t, v) in iter.clone() {
        n += 1;
        sum_t += t;
        sum_v += v;
        t_latest = t_latest.max(t);
    }
    if n < 2 {
        return Err(FitError::TooFewSamples(n));
    }
    let mean_t = sum_t / n as f64;
    let mean_v = sum_v / n as f64;
    let (mut stt, mut stv) = (0.0, 0.0);
    for (t, v) in iter {
        let dt = t - mean_t;
        stt += dt * dt;
        stv += dt * (v - mean_v);
    }
    if !(stt > 0.0) {
        return Err(FitError::DegenerateTime);
    }
    let slope = stv / stt;
    let intercept = mean_v - slope * mean_t;
    Ok(RegressionResult {
        slope,
        intercept,
        n,
        fitted_latest: mean_v + slope * (t_latest - mean_t),
        t_mean: mean_t,
        fitted_mean: mean_v,
        t_latest,
    })
}

/// One matched observation of a track.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub h: f64,
    pub w: f64,
    pub cx: f64,
    /// Bottom edge of the box.
    pub by: f64,
}

/// Ring buffer of the newest samples of one track.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleWindow {
    samples: VecDeque<Sample>,
    capacity: usize,
}

impl SampleWindow {
    pub fn new(capacity: usize) -> Self {
        let capacity = capacity.max(2);
        Self { samples: VecDeque::with_capacity(capacity), capacity }
    }

    pub fn push(&mut self, sample: Sample) -> Result<(), WindowError> {
        if !(sample.h > 0.0 && sample.w > 0.0 && sample.h.is_finite() && sample.w.is_finite()) {
            return Err(WindowError::InvalidSize);
        }
        if let Some(last) = self.samples.back() {
            if !(sample.t > last.t) {
                return Err(WindowError::NonIncreasingTime { t: sample.t, last: last.t });
            }
        }
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back(sample);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn latest(&self) -> Option<&Sample> {
        self.samples.back()
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &Sample> + Clone {
        self.samples.iter()
    }

    /// The newest `n` samples, oldest first. `None` if fewer are held.
    pub fn newest(&self, n: usize) -> Option<impl Iterator<Item = &Sample> + Clone> {
        (n <= self.samples.len()).then(|| self.samples.iter().skip(self.samples.len() - n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TtcEstimate {
    pub ttc_h: Option<f64>,
    pub ttc_w: Option<f64>,
    pub slope_h: f64,
    pub slope_w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionEstimate {
    /// Slope of the half-width-normalized horizontal center, per second.
    pub omega: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    pub size_window_len: usize,
    pub center_window_len: usize,
    /// Size-change rates below this magnitude (pixels/second) give no TTC.
    pub slope_epsilon: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self { size_window_len: 12, center_window_len: 18, slope_epsilon: 1e-3 }
    }
}

impl EstimatorConfig {
    pub fn window_capacity(&self) -> usize {
        self.size_window_len.max(self.center_window_len)
    }
}

/// Size over size-change rate, referenced to the newest sample.
///
/// The least-squares slope is the rate at the window's mean time, so the size
/// is taken there too and the elapsed time to the newest sample subtracted.
/// Dividing the end-of-window size by the mid-window rate would overstate TTC
/// by the full window span.
pub fn ttc_from_fit(fit: &RegressionResult, slope_epsilon: f64) -> Option<f64> {
    (fit.slope.abs() >= slope_epsilon).then(|| fit.fitted_mean / fit.slope - (fit.t_latest - fit.t_mean))
}

/// Height and width TTC over the newest `size_window_len` samples. Positive
/// values mean the target is approaching. `None` until the window is full.
pub fn ttc_from_window(window: &SampleWindow, size_window_len: usize, slope_epsilon: f64) -> Option<TtcEstimate> {
    let n = size_window_len.max(2);
    let recent = window.newest(n)?;
    let fit_h = fit_slope(recent.clone().map(|s| (s.t, s.h))).ok()?;
    let fit_w = fit_slope(recent.map(|s| (s.t, s.w))).ok()?;
    Some(TtcEstimate {
        ttc_h: ttc_from_fit(&fit_h, slope_epsilon),
        ttc_w: ttc_from_fit(&fit_w, slope_epsilon),
        slope_h: fit_h.slope,
        slope_w: fit_w.slope,
    })
}

/// Horizontal position normalized so that the frame edges map to about +-1
/// around the line of sight `c_los`.
pub fn normalized_x(cx: f64, c_los: f64, frame_width: f64) -> f64 {
    (cx - c_los) / (frame_width / 2.0)
}

/// Slope of the normalized center over the newest `center_window_len` samples.
pub fn horizontal_motion(
    window: &SampleWindow,
    center_window_len: usize,
    c_los: f64,
    frame_width: f64,
) -> Option<MotionEstimate> {
    let n = center_window_len.max(2);
    let recent = window.newest(n)?;
    let fit = fit_slope(recent.map(|s| (s.t, normalized_x(s.cx, c_los, frame_width)))).ok()?;
    Some(MotionEstimate { omega: fit.slope, n: fit.n })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window_from(values: &[(f64, f64)]) -> SampleWindow {
        let mut w = SampleWindow::new(values.len());
        for &(t, h) in values {
            w.push(Sample { t, h, w: h * 1.2, cx: 100.0, by: 300.0 }).unwrap();
        }
        w
    }

    #[test]
    fn exact_line() {
        let r = fit_slope([(0.0, 1.0), (1.0, 2.0), (2.0, 3.0)]).unwrap();
        assert!((r.slope - 1.0).abs() < 1e-12);
        assert!((r.fitted_latest - 3.0).abs() < 1e-12);
        assert!((r.intercept - 1.0).abs() < 1e-12);
        assert_eq!(r.n, 3);
    }

    #[test]
    fn flat_line() {
        let r = fit_slope([(0.0, 4.0), (0.3, 4.0), (0.9, 4.0)]).unwrap();
        assert_eq!(r.slope, 0.0);
    }

    #[test]
    fn undefined_fits() {
        assert_eq!(fit_slope([(1.0, 2.0)]), Err(FitError::TooFewSamples(1)));
        assert_eq!(fit_slope(Vec::<(f64, f64)>::new()), Err(FitError::TooFewSamples(0)));
        assert_eq!(fit_slope([(1.0, 2.0), (1.0, 3.0)]), Err(FitError::DegenerateTime));
    }

    #[test]
    fn eviction_drops_oldest() {
        let mut w = SampleWindow::new(3);
        for i in 0..4 {
            w.push(Sample { t: i as f64, h: 1.0 + i as f64, w: 1.0, cx: 0.0, by: 0.0 }).unwrap();
        }
        let ts: Vec<f64> = w.iter().map(|s| s.t).collect();
        assert_eq!(ts, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn window_rejects_bad_samples() {
        let mut w = SampleWindow::new(4);
        w.push(Sample { t: 1.0, h: 1.0, w: 1.0, cx: 0.0, by: 0.0 }).unwrap();
        assert!(matches!(
            w.push(Sample { t: 1.0, h: 1.0, w: 1.0, cx: 0.0, by: 0.0 }),
            Err(WindowError::NonIncreasingTime { .. })
        ));
        assert_eq!(w.push(Sample { t: 2.0, h: 0.0, w: 1.0, cx: 0.0, by: 0.0 }), Err(WindowError::InvalidSize));
    }

    #[test]
    fn not_ready_until_full() {
        let w = window_from(&[(0.0, 10.0), (0.1, 11.0)]);
        assert!(ttc_from_window(&w, 3, 1e-3).is_none());
        assert!(ttc_from_window(&w, 2, 1e-3).is_some());
        assert!(horizontal_motion(&w, 3, 0.0, 200.0).is_none());
    }

    #[test]
    fn shrinking_box_gives_negative_ttc() {
        let w = window_from(&[(0.0, 20.0), (0.1, 19.0), (0.2, 18.0)]);
        let est = ttc_from_window(&w, 3, 1e-3).unwrap();
        assert!(est.ttc_h.unwrap() < 0.0);
        // Fitted size 19 at t = 0.1, rate -10/s, then 0.1 s later.
        assert!((est.ttc_h.unwrap() - (19.0 / -10.0 - 0.1)).abs() < 1e-9);
    }

    #[test]
    fn flat_size_gives_no_ttc() {
        let w = window_from(&[(0.0, 20.0), (0.1, 20.0), (0.2, 20.0)]);
        let est = ttc_from_window(&w, 3, 1e-3).unwrap();
        assert_eq!(est.ttc_h, None);
        assert_eq!(est.ttc_w, None);
    }

    #[test]
    fn centered_target_has_zero_omega() {
        let mut w = SampleWindow::new(5);
        for i in 0..5 {
            w.push(Sample { t: i as f64 * 0.04, h: 10.0 + i as f64, w: 10.0, cx: 640.0, by: 400.0 }).unwrap();
        }
        let m = horizontal_motion(&w, 5, 640.0, 1280.0).unwrap();
        assert_eq!(m.omega, 0.0);
        assert_eq!(m.n, 5);
    }
}
