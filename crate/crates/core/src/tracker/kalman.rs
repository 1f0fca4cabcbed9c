//! Constant-velocity box filter over `[cx, cy, area, aspect, vx, vy, v_area]`.
//!
//! Velocities are per second. The noise defaults are the usual SORT values,
//! which are expressed per frame; they are rescaled with the nominal frame
//! period so that a step of `dt` seconds counts as `dt * nominal_fps` frames.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::types::BBox;

type State = SVector<f64, 7>;
type Cov = SMatrix<f64, 7, 7>;
type Meas = SVector<f64, 4>;

const MIN_AREA: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KalmanConfig {
    /// Frame rate the per-frame noise values refer to.
    pub nominal_fps: f64,
    pub measurement_var_center: f64,
    pub measurement_var_shape: f64,
    pub initial_var_position: f64,
    pub initial_var_velocity: f64,
    pub process_var_position: f64,
    pub process_var_velocity: f64,
    pub process_var_area_velocity: f64,
}

impl Default for KalmanConfig {
    fn default() -> Self {
        Self {
            nominal_fps: 24.0,
            measurement_var_center: 1.0,
            measurement_var_shape: 10.0,
            initial_var_position: 10.0,
            initial_var_velocity: 1e4,
            process_var_position: 1.0,
            process_var_velocity: 1e-2,
            process_var_area_velocity: 1e-4,
        }
    }
}

fn measurement(b: &BBox) -> Meas {
    let w = b.width();
    let h = b.height();
    Meas::new(b.center_x(), b.center_y(), w * h, w / h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxFilter {
    x: State,
    p: Cov,
    cfg: KalmanConfig,
}

impl BoxFilter {
    pub fn new(initial: &BBox, cfg: KalmanConfig) -> Self {
        let z = measurement(initial);
        let mut x = State::zeros();
        x.fixed_rows_mut::<4>(0).copy_from(&z);
        let fps2 = cfg.nominal_fps * cfg.nominal_fps;
        let mut p = Cov::zeros();
        for i in 0..4 {
            p[(i, i)] = cfg.initial_var_position;
        }
        for i in 4..7 {
            p[(i, i)] = cfg.initial_var_velocity * fps2;
        }
        Self { x, p, cfg }
    }

    /// Center and area velocities in pixels/second and pixels^2/second.
    pub fn velocity(&self) -> (f64, f64, f64) {
        (self.x[4], self.x[5], self.x[6])
    }

    pub fn set_velocity(&mut self, vx: f64, vy: f64, v_area: f64) {
        self.x[4] = vx;
        self.x[5] = vy;
        self.x[6] = v_area;
    }

    pub fn aspect_ratio(&self) -> f64 {
        self.x[3]
    }

    pub fn area(&self) -> f64 {
        self.x[2]
    }

    /// Box implied by the current state, `None` if the state is degenerate.
    pub fn bbox(&self) -> Option<BBox> {
        let (s, r) = (self.x[2], self.x[3]);
        if !(s > 0.0 && r > 0.0) || !self.x.iter().all(|v| v.is_finite()) {
            return None;
        }
        let w = (s * r).sqrt();
        let h = s / w;
        Some(BBox::from_center(self.x[0], self.x[1], w, h))
    }

    pub fn predict(&mut self, dt: f64) -> Option<BBox> {
        let dt = dt.max(0.0);
        if self.x[2] + self.x[6] * dt <= MIN_AREA {
            self.x[6] = 0.0;
        }
        let mut f = Cov::identity();
        f[(0, 4)] = dt;
        f[(1, 5)] = dt;
        f[(2, 6)] = dt;
        self.x = f * self.x;
        self.x[2] = self.x[2].max(MIN_AREA);

        let frames = dt * self.cfg.nominal_fps;
        let fps2 = self.cfg.nominal_fps * self.cfg.nominal_fps;
        let mut q = Cov::zeros();
        for i in 0..4 {
            q[(i, i)] = self.cfg.process_var_position;
        }
        q[(4, 4)] = self.cfg.process_var_velocity * fps2;
        q[(5, 5)] = self.cfg.process_var_velocity * fps2;
        q[(6, 6)] = self.cfg.process_var_area_velocity * fps2;
        self.p = f * self.p * f.transpose() + q * frames;
        self.bbox()
    }

    pub fn update(&mut self, observed: &BBox) {
        let z = measurement(observed);
        let mut h = SMatrix::<f64, 4, 7>::zeros();
        for i in 0..4 {
            h[(i, i)] = 1.0;
        }
        let r = SMatrix::<f64, 4, 4>::from_diagonal(&Meas::new(
            self.cfg.measurement_var_center,
            self.cfg.measurement_var_center,
            self.cfg.measurement_var_shape,
            self.cfg.measurement_var_shape,
        ));
        let y = z - h * self.x;
        let s = h * self.p * h.transpose() + r;
        let Some(s_inv) = s.try_inverse() else {
            // Singular innovation: fall back to the measurement.
            self.x.fixed_rows_mut::<4>(0).copy_from(&z);
            return;
        };
        let k = self.p * h.transpose() * s_inv;
        self.x += k * y;
        self.p = (Cov::identity() - k * h) * self.p;
        self.x[3] = self.x[3].max(f64::EPSILON);
        self.x[2] = self.x[2].max(MIN_AREA);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &BBox, b: &BBox) -> bool {
        [a.x1 - b.x1, a.y1 - b.y1, a.x2 - b.x2, a.y2 - b.y2].iter().all(|d| d.abs() < 1e-9)
    }

    #[test]
    fn stationary_state_does_not_move() {
        let b = BBox::new(10.0, 20.0, 50.0, 80.0);
        let mut f = BoxFilter::new(&b, KalmanConfig::default());
        assert!(close(&f.predict(0.7).unwrap(), &b));
    }

    #[test]
    fn linear_extrapolation() {
        let b = BBox::new(10.0, 20.0, 50.0, 80.0);
        let mut f = BoxFilter::new(&b, KalmanConfig::default());
        f.set_velocity(10.0, 0.0, 0.0);
        let p = f.predict(0.5).unwrap();
        assert!((p.center_x() - (b.center_x() + 5.0)).abs() < 1e-9);
        assert!((p.width() - b.width()).abs() < 1e-9);
    }

    #[test]
    fn zero_dt_is_identity() {
        let b = BBox::new(10.0, 20.0, 50.0, 80.0);
        let mut f = BoxFilter::new(&b, KalmanConfig::default());
        f.set_velocity(3.0, -4.0, 100.0);
        assert!(close(&f.predict(0.0).unwrap(), &b));
    }

    #[test]
    fn area_is_floored() {
        let b = BBox::new(0.0, 0.0, 2.0, 2.0);
        let mut f = BoxFilter::new(&b, KalmanConfig::default());
        f.set_velocity(0.0, 0.0, -1000.0);
        let p = f.predict(1.0).unwrap();
        assert!(p.area() > 0.0);
        assert!(f.area() > 0.0);
    }

    #[test]
    fn update_pulls_toward_measurement() {
        let b = BBox::new(0.0, 0.0, 20.0, 20.0);
        let mut f = BoxFilter::new(&b, KalmanConfig::default());
        f.predict(1.0 / 24.0);
        let obs = BBox::new(4.0, 0.0, 24.0, 20.0);
        f.update(&obs);
        let est = f.bbox().unwrap();
        assert!(est.center_x() > b.center_x() && est.center_x() <= obs.center_x() + 1e-9);
    }
}
