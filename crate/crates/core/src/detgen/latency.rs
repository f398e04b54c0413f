//! Forward-pass latency emulation.
//!
//! The default profile is a calibration, not a measurement: with
//! `t_fixed = 8 ms` and `t_image = 34 ms` a single full-precision frame costs
//! 42 ms, which together with ~10.5 ms of post-processing yields the ~19 FPS
//! baseline where the model accounts for roughly 80% of the frame time.
//! `kappa_mixed = 0.786` brings the single-frame cost to 34.7 ms, i.e. about
//! 22-23 FPS for the serialized mixed-precision pipeline.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::precision::Precision;

/// Cost of one batched forward pass: `t_fixed + batch * t_image * kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyModel {
    pub t_fixed_ms: f64,
    pub t_image_ms: f64,
    pub kappa: f64,
}

impl LatencyModel {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.t_fixed_ms) || !positive(self.t_image_ms) {
            return Err(Error::Config(format!(
                "latency terms must be positive, got t_fixed={} t_image={}",
                self.t_fixed_ms, self.t_image_ms
            )));
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::Config(format!(
                "kappa must lie in (0, 1], got {}",
                self.kappa
            )));
        }
        Ok(())
    }

    pub fn batch_ms(&self, batch_size: usize) -> Result<f64> {
        emulated_latency(self, batch_size)
    }

    /// Amortized model time per frame at the given batch size.
    pub fn per_frame_ms(&self, batch_size: usize) -> Result<f64> {
        Ok(self.batch_ms(batch_size)? / batch_size as f64)
    }
}

pub fn emulated_latency(model: &LatencyModel, batch_size: usize) -> Result<f64> {
    if batch_size < 1 {
        return Err(Error::Config("batch size must be at least 1".into()));
    }
    model.validate()?;
    Ok(model.t_fixed_ms + batch_size as f64 * model.t_image_ms * model.kappa)
}

/// Latency terms shared by both precisions, with one kappa per precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LatencyProfile {
    pub t_fixed_ms: f64,
    pub t_image_ms: f64,
    pub kappa_full: f64,
    pub kappa_mixed: f64,
}

impl Default for LatencyProfile {
    fn default() -> Self {
        LatencyProfile {
            t_fixed_ms: 8.0,
            t_image_ms: 34.0,
            kappa_full: 1.0,
            kappa_mixed: 0.786,
        }
    }
}

impl LatencyProfile {
    pub fn model(&self, precision: Precision) -> LatencyModel {
        LatencyModel {
            t_fixed_ms: self.t_fixed_ms,
            t_image_ms: self.t_image_ms,
            kappa: match precision {
                Precision::Full => self.kappa_full,
                Precision::Mixed => self.kappa_mixed,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model(Precision::Full).validate()?;
        self.model(Precision::Mixed).validate()
    }
}

/// Blocks the calling context for `ms` milliseconds. Sleeps by default;
/// `busy_wait` spins on the monotonic clock instead.
pub fn emulate_delay(ms: f64, busy_wait: bool) {
    if !(ms > 0.0) {
        return;
    }
    let d = Duration::from_secs_f64(ms / 1000.0);
    if busy_wait {
        let start = Instant::now();
        while start.elapsed() < d {
            std::hint::spin_loop();
        }
    } else {
        std::thread::sleep(d);
    }
}
