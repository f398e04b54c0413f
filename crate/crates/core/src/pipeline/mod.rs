//! Staged tracking runtime: capture, batched inference and post-processing,
//! either serialized in one context or pipelined across three contexts
//! joined by bounded queues.

mod batcher;
mod queue;
mod report;
mod run;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::detgen::LatencyProfile;
use crate::error::{Error, Result};
use crate::precision::Precision;
use crate::tracker::TrackerConfig;

pub use batcher::{batcher, Batcher};
pub use queue::{Received, StageQueue};
pub use report::{measure_fps, FpsMeasurement, FrameTiming, ReportRow, RunReport, CSV_HEADER};
pub use run::run;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    Serial,
    BatchedSerial,
    Parallel,
}

impl ModeKind {
    pub const ALL: [ModeKind; 3] = [ModeKind::Serial, ModeKind::BatchedSerial, ModeKind::Parallel];

    pub fn as_str(self) -> &'static str {
        match self {
            ModeKind::Serial => "serial",
            ModeKind::BatchedSerial => "batched",
            ModeKind::Parallel => "parallel",
        }
    }
}

impl fmt::Display for ModeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "serial" => Ok(ModeKind::Serial),
            "batched" | "batched_serial" | "batched-serial" => Ok(ModeKind::BatchedSerial),
            "parallel" => Ok(ModeKind::Parallel),
            _ => Err(Error::Config(format!(
                "unknown mode '{s}' (expected serial, batched or parallel)"
            ))),
        }
    }
}

/// Execution strategy × precision × batch size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PipelineMode {
    pub kind: ModeKind,
    pub precision: Precision,
    pub batch_size: usize,
}

impl PipelineMode {
    pub fn new(kind: ModeKind, precision: Precision, batch_size: usize) -> Result<Self> {
        let m = PipelineMode {
            kind,
            precision,
            batch_size,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn serial(precision: Precision) -> Self {
        PipelineMode {
            kind: ModeKind::Serial,
            precision,
            batch_size: 1,
        }
    }

    pub fn batched(precision: Precision, batch_size: usize) -> Result<Self> {
        Self::new(ModeKind::BatchedSerial, precision, batch_size)
    }

    pub fn parallel(precision: Precision, batch_size: usize) -> Result<Self> {
        Self::new(ModeKind::Parallel, precision, batch_size)
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.kind == ModeKind::Serial && self.batch_size != 1 {
            return Err(Error::Config(format!(
                "serial mode requires batch size 1, got {}",
                self.batch_size
            )));
        }
        Ok(())
    }

    /// The four benchmark variants in increasing order of optimization:
    /// original, mixed precision, plus batching, plus parallel post-processing.
    pub fn variants(batch_size: usize) -> Result<[(&'static str, PipelineMode); 4]> {
        Ok([
            ("OP", Self::serial(Precision::Full)),
            ("MP", Self::serial(Precision::Mixed)),
            ("MP+BW", Self::batched(Precision::Mixed, batch_size)?),
            ("MP+BW+PP", Self::parallel(Precision::Mixed, batch_size)?),
        ])
    }
}

impl fmt::Display for PipelineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/b{}", self.kind, self.precision, self.batch_size)
    }
}

/// Emulated post-processing cost per frame, on top of the real tracker work.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PostCostModel {
    pub fixed_ms: f64,
    pub per_detection_ms: f64,
}

impl Default for PostCostModel {
    fn default() -> Self {
        PostCostModel {
            fixed_ms: 8.5,
            per_detection_ms: 0.1,
        }
    }
}

impl PostCostModel {
    /// Zero cost: only the real tracker work remains.
    pub fn none() -> Self {
        PostCostModel {
            fixed_ms: 0.0,
            per_detection_ms: 0.0,
        }
    }

    pub fn frame_ms(&self, detections: usize) -> f64 {
        self.fixed_ms + self.per_detection_ms * detections as f64
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.fixed_ms) || !ok(self.per_detection_ms) {
            return Err(Error::Config("post-processing costs must be finite and non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub tracker: TrackerConfig,
    pub latency: LatencyProfile,
    pub post_cost: PostCostModel,
    pub q1_capacity: usize,
    pub q2_capacity: usize,
    pub warmup_frames: usize,
    /// Spin instead of sleeping while emulating latency.
    pub busy_wait: bool,
    /// Upper bound on concurrent execution contexts used by parallel mode.
    pub max_contexts: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            tracker: TrackerConfig::default(),
            latency: LatencyProfile::default(),
            post_cost: PostCostModel::default(),
            q1_capacity: 32,
            q2_capacity: 64,
            warmup_frames: 10,
            busy_wait: false,
            max_contexts: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.tracker.validate()?;
        self.latency.validate()?;
        self.post_cost.validate()?;
        if self.q1_capacity == 0 || self.q2_capacity == 0 {
            return Err(Error::Config("queue capacities must be positive".into()));
        }
        if self.max_contexts == Some(0) {
            return Err(Error::Config("max_contexts must be at least 1".into()));
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: PipelineConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&s)
    }

    /// Analytic per-frame inference time for `mode`.
    pub fn model_ms_per_frame(&self, mode: &PipelineMode) -> Result<f64> {
        self.latency.model(mode.precision).per_frame_ms(mode.batch_size)
    }

    /// Analytic FPS: serialized modes add the stages, parallel mode is bound
    /// by the slower one.
    pub fn predicted_fps(&self, mode: &PipelineMode, detections_per_frame: usize) -> Result<f64> {
        let model = self.model_ms_per_frame(mode)?;
        let post = self.post_cost.frame_ms(detections_per_frame);
        let per_frame = match mode.kind {
            ModeKind::Parallel => model.max(post),
            _ => model + post,
        };
        Ok(1000.0 / per_frame)
    }
}
