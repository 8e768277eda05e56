//! Constant-velocity Kalman filter over `[cx, cy, s, r, vx, vy, vs]`
//! (box center, area, aspect ratio and the velocities of the first three).

use nalgebra::{SMatrix, SVector};

use crate::geom::BBox;

pub type StateVec = SVector<f64, 7>;
pub type StateCov = SMatrix<f64, 7, 7>;
type Meas = SVector<f64, 4>;
type MeasCov = SMatrix<f64, 4, 4>;
type Gain = SMatrix<f64, 7, 4>;
type Obs = SMatrix<f64, 4, 7>;

/// Floor applied to area and aspect ratio so the state always maps back to
/// a valid box.
pub const MIN_SCALE: f64 = 1e-6;

/// Noise and initial uncertainty. Defaults follow SORT.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KalmanParams {
    /// Multiplies the measurement noise `diag(1, 1, 10, 10)`.
    pub sigma_m: f64,
    /// Initial variance of the observed components.
    pub p0_pos: f64,
    /// Initial variance of the velocities.
    pub p0_vel: f64,
    /// Process noise on the observed components.
    pub q_pos: f64,
    /// Process noise on the center velocities.
    pub q_vel: f64,
    /// Process noise on the area velocity.
    pub q_scale_vel: f64,
}

impl Default for KalmanParams {
    fn default() -> Self {
        KalmanParams {
            sigma_m: 1.0,
            p0_pos: 10.0,
            p0_vel: 1e4,
            q_pos: 1.0,
            q_vel: 0.01,
            q_scale_vel: 1e-4,
        }
    }
}

impl KalmanParams {
    pub fn transition() -> StateCov {
        let mut f = StateCov::identity();
        f[(0, 4)] = 1.0;
        f[(1, 5)] = 1.0;
        f[(2, 6)] = 1.0;
        f
    }

    pub fn observation() -> Obs {
        let mut h = Obs::zeros();
        for i in 0..4 {
            h[(i, i)] = 1.0;
        }
        h
    }

    pub fn measurement_noise(&self) -> MeasCov {
        MeasCov::from_diagonal(&Meas::new(1.0, 1.0, 10.0, 10.0)) * self.sigma_m
    }

    pub fn process_noise(&self) -> StateCov {
        let (p, v, s) = (self.q_pos, self.q_vel, self.q_scale_vel);
        StateCov::from_diagonal(&StateVec::from_column_slice(&[p, p, p, p, v, v, s]))
    }

    pub fn initial_covariance(&self) -> StateCov {
        let (p, v) = (self.p0_pos, self.p0_vel);
        StateCov::from_diagonal(&StateVec::from_column_slice(&[p, p, p, p, v, v, v]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KalmanState {
    pub x: StateVec,
    pub p: StateCov,
}

/// `(cx, cy, s, r)` of a box.
pub fn box_to_z(b: &BBox) -> [f64; 4] {
    let (cx, cy) = b.center();
    [cx, cy, b.w * b.h, b.w / b.h]
}

/// Inverse of [`box_to_z`]. `s` and `r` must be positive.
pub fn z_to_box(cx: f64, cy: f64, s: f64, r: f64) -> BBox {
    let w = (s * r).sqrt();
    let h = s / w;
    BBox {
        x: cx - w / 2.0,
        y: cy - h / 2.0,
        w,
        h,
    }
}

impl KalmanState {
    pub fn init(b: &BBox, params: &KalmanParams) -> Self {
        let z = box_to_z(b);
        KalmanState {
            x: StateVec::from_column_slice(&[z[0], z[1], z[2], z[3], 0.0, 0.0, 0.0]),
            p: params.initial_covariance(),
        }
    }

    pub fn bbox(&self) -> BBox {
        z_to_box(self.x[0], self.x[1], self.x[2].max(MIN_SCALE), self.x[3].max(MIN_SCALE))
    }

    /// One tick of the constant-velocity model. An area velocity that
    /// would drive the area non-positive is zeroed first.
    pub fn predict(&self, params: &KalmanParams) -> Self {
        let mut x = self.x;
        if x[2] + x[6] <= 0.0 {
            x[6] = 0.0;
        }
        let f = KalmanParams::transition();
        let mut x = f * x;
        if x[2] <= 0.0 {
            x[2] = MIN_SCALE;
            x[6] = 0.0;
        }
        let p = f * self.p * f.transpose() + params.process_noise();
        KalmanState { x, p: symmetric(p) }
    }

    /// Kalman correction with the box as measurement (Joseph form).
    pub fn update(&self, b: &BBox, params: &KalmanParams) -> Self {
        let h = KalmanParams::observation();
        let r = params.measurement_noise();
        let z = Meas::from_column_slice(&box_to_z(b));
        let y = z - h * self.x;
        let s = h * self.p * h.transpose() + r;
        let s_inv = s
            .cholesky()
            .map(|c| c.inverse())
            .or_else(|| s.try_inverse())
            .expect("innovation covariance is positive definite");
        let k: Gain = self.p * h.transpose() * s_inv;
        let mut x = self.x + k * y;
        let ikh = StateCov::identity() - k * h;
        let p = ikh * self.p * ikh.transpose() + k * r * k.transpose();
        x[2] = x[2].max(MIN_SCALE);
        x[3] = x[3].max(MIN_SCALE);
        KalmanState { x, p: symmetric(p) }
    }
}

fn symmetric(p: StateCov) -> StateCov {
    (p + p.transpose()) * 0.5
}
