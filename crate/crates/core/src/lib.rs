//! Tracking-by-detection library: detection post-processing, Kalman motion
//! model, appearance association, track lifecycle, a staged concurrent
//! pipeline with latency emulation, and CLEAR-MOT/identity evaluation.

pub mod assoc;
pub mod detection;
pub mod detgen;
pub mod embedding;
pub mod error;
pub mod geometry;
pub mod motion;
pub mod moteval;
pub mod pipeline;
pub mod postproc;
pub mod precision;
pub mod tracker;

pub use detection::Detection;
pub use detgen::{DetectionSource, FileSource, FramePacket, RawModelOutput, ScenarioConfig, SyntheticSource};
pub use embedding::{Embedding, EMBEDDING_DIM};
pub use error::{Error, Result};
pub use geometry::BoundingBox;
pub use moteval::MotMetrics;
pub use pipeline::{ModeKind, PipelineConfig, PipelineMode, RunReport};
pub use precision::Precision;
pub use tracker::{Tracker, TrackerConfig, TrackerOutput};
