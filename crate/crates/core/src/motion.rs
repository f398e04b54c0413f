//! Constant-velocity Kalman filter over `(cx, cy, aspect, h)` with
//! velocities, one frame per time step.
//!
//! Process and measurement noise scale with the box height: position terms
//! use `std_weight_position * h`, velocity terms `std_weight_velocity * h`,
//! while aspect-ratio terms are constant.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Measurement;

pub type StateVector = SVector<f64, 8>;
pub type StateCovariance = SMatrix<f64, 8, 8>;
pub type MeasVector = SVector<f64, 4>;
pub type MeasCovariance = SMatrix<f64, 4, 4>;

/// 0.95 quantile of the chi-square distribution with 4 degrees of freedom.
pub const CHI2_95_4DOF: f64 = 9.4877;

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub mean: StateVector,
    pub covariance: StateCovariance,
}

impl KalmanState {
    pub fn measurement(&self) -> Measurement {
        [self.mean[0], self.mean[1], self.mean[2], self.mean[3]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MotionNoise {
    pub std_weight_position: f64,
    pub std_weight_velocity: f64,
    /// Process noise std for the aspect ratio.
    pub aspect_std: f64,
    /// Process noise std for the aspect-ratio velocity.
    pub aspect_velocity_std: f64,
    /// Measurement noise std for the aspect ratio.
    pub aspect_measurement_std: f64,
}

impl Default for MotionNoise {
    fn default() -> Self {
        MotionNoise {
            std_weight_position: 1.0 / 20.0,
            std_weight_velocity: 1.0 / 160.0,
            aspect_std: 1e-2,
            aspect_velocity_std: 1e-5,
            aspect_measurement_std: 1e-1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KalmanFilter {
    noise: MotionNoise,
    motion: StateCovariance,
}

impl Default for KalmanFilter {
    fn default() -> Self {
        KalmanFilter::new(MotionNoise::default())
    }
}

fn diag8(std: [f64; 8]) -> StateCovariance {
    StateCovariance::from_diagonal(&StateVector::from_iterator(std.iter().map(|s| s * s)))
}

fn diag4(std: [f64; 4]) -> MeasCovariance {
    MeasCovariance::from_diagonal(&MeasVector::from_iterator(std.iter().map(|s| s * s)))
}

#[inline]
fn symmetrize(p: &StateCovariance) -> StateCovariance {
    (p + p.transpose()) * 0.5
}

impl KalmanFilter {
    pub fn new(noise: MotionNoise) -> Self {
        let mut motion = StateCovariance::identity();
        for i in 0..4 {
            motion[(i, i + 4)] = 1.0;
        }
        KalmanFilter { noise, motion }
    }

    pub fn noise(&self) -> &MotionNoise {
        &self.noise
    }

    /// Birth state: the measurement with zero velocity.
    pub fn initiate(&self, m: &Measurement) -> Result<KalmanState> {
        check_measurement(m)?;
        let h = m[3];
        let (wp, wv) = (self.noise.std_weight_position, self.noise.std_weight_velocity);
        let mut mean = StateVector::zeros();
        mean.fixed_rows_mut::<4>(0).copy_from(&MeasVector::from_row_slice(m));
        let covariance = diag8([
            2.0 * wp * h,
            2.0 * wp * h,
            self.noise.aspect_std,
            2.0 * wp * h,
            10.0 * wv * h,
            10.0 * wv * h,
            self.noise.aspect_velocity_std,
            10.0 * wv * h,
        ]);
        Ok(KalmanState { mean, covariance })
    }

    pub fn process_noise(&self, height: f64) -> StateCovariance {
        let (wp, wv) = (self.noise.std_weight_position, self.noise.std_weight_velocity);
        diag8([
            wp * height,
            wp * height,
            self.noise.aspect_std,
            wp * height,
            wv * height,
            wv * height,
            self.noise.aspect_velocity_std,
            wv * height,
        ])
    }

    pub fn measurement_noise(&self, height: f64) -> MeasCovariance {
        let wp = self.noise.std_weight_position;
        diag4([
            wp * height,
            wp * height,
            self.noise.aspect_measurement_std,
            wp * height,
        ])
    }

    pub fn predict(&self, state: &KalmanState) -> KalmanState {
        let q = self.process_noise(state.mean[3]);
        let f = &self.motion;
        KalmanState {
            mean: f * state.mean,
            covariance: symmetrize(&(f * state.covariance * f.transpose() + q)),
        }
    }

    /// Projects the state into measurement space: `(H x, H P H^T + R)`.
    pub fn project(&self, state: &KalmanState) -> (MeasVector, MeasCovariance) {
        let mean = state.mean.fixed_rows::<4>(0).into_owned();
        let cov = state.covariance.fixed_view::<4, 4>(0, 0).into_owned()
            + self.measurement_noise(state.mean[3]);
        (mean, cov)
    }

    pub fn update(&self, state: &KalmanState, m: &Measurement) -> Result<KalmanState> {
        check_measurement(m)?;
        let (proj_mean, proj_cov) = self.project(state);
        let chol = proj_cov
            .cholesky()
            .ok_or_else(|| Error::Numeric("innovation covariance not positive definite".into()))?;
        // K^T = S^-1 (P H^T)^T = S^-1 (H P)
        let hp: SMatrix<f64, 4, 8> = state.covariance.fixed_view::<4, 8>(0, 0).into_owned();
        let gain = chol.solve(&hp).transpose();
        let innovation = MeasVector::from_row_slice(m) - proj_mean;
        let mean = state.mean + gain * innovation;
        let covariance = symmetrize(&(state.covariance - gain * proj_cov * gain.transpose()));
        Ok(KalmanState { mean, covariance })
    }

    /// Squared Mahalanobis distance of each measurement from the projected
    /// state, on all four measurement dimensions.
    pub fn gating_distance(&self, state: &KalmanState, ms: &[Measurement]) -> Result<Vec<f64>> {
        let (mean, cov) = self.project(state);
        let chol = cov
            .cholesky()
            .ok_or_else(|| Error::Numeric("projected covariance not positive definite".into()))?;
        Ok(ms
            .iter()
            .map(|m| {
                let d = MeasVector::from_row_slice(m) - mean;
                let z = chol.l().solve_lower_triangular(&d).expect("cholesky factor is invertible");
                z.norm_squared()
            })
            .collect())
    }
}

/// Squared Euclidean distance between the predicted center and each
/// measurement's center, in pixels squared.
pub fn center_distance_sq(state: &KalmanState, ms: &[Measurement]) -> Vec<f64> {
    ms.iter()
        .map(|m| {
            let dx = m[0] - state.mean[0];
            let dy = m[1] - state.mean[1];
            dx * dx + dy * dy
        })
        .collect()
}

/// `d^T S^-1 d` for a single innovation and covariance.
pub fn squared_mahalanobis(cov: &MeasCovariance, d: &MeasVector) -> Result<f64> {
    let chol = cov
        .cholesky()
        .ok_or_else(|| Error::Numeric("covariance not positive definite".into()))?;
    Ok(d.dot(&chol.solve(d)))
}

fn check_measurement(m: &Measurement) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) || !(m[3] > 0.0) {
        return Err(Error::InvalidMeasurement(format!(
            "measurement {m:?} needs finite values and positive height"
        )));
    }
    Ok(())
}
