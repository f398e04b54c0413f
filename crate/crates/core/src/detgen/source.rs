use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::raw::RawModelOutput;
use super::scenario::{generate_frame, ScenarioConfig};
use crate::error::{Error, Result};

/// Frame metadata flowing from capture to inference. No pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FramePacket {
    pub index: usize,
    /// Presentation timestamp within the sequence, in milliseconds.
    pub timestamp_ms: f64,
    pub width: u32,
    pub height: u32,
}

/// Something that can play the role of the detector's forward pass.
///
/// Implementations must be deterministic per frame: the pipeline relies on
/// `infer` returning identical output for a frame regardless of batching or
/// which execution context calls it.
pub trait DetectionSource: Send + Sync {
    fn num_frames(&self) -> usize;

    fn frame_size(&self) -> (u32, u32);

    fn fps(&self) -> f64 {
        30.0
    }

    /// Embedding width of the rows this source produces.
    fn embedding_dim(&self) -> usize;

    fn capture(&self, index: usize) -> FramePacket {
        let (width, height) = self.frame_size();
        FramePacket {
            index,
            timestamp_ms: index as f64 * 1000.0 / self.fps(),
            width,
            height,
        }
    }

    fn infer(&self, frame: &FramePacket) -> Result<RawModelOutput>;
}

/// Detector stand-in backed by a synthetic scenario.
#[derive(Debug, Clone)]
pub struct SyntheticSource {
    scenario: ScenarioConfig,
    seed: u64,
    num_frames: usize,
}

impl SyntheticSource {
    pub fn new(scenario: ScenarioConfig, seed: u64) -> Result<Self> {
        scenario.validate()?;
        let num_frames = scenario.num_frames;
        Ok(SyntheticSource {
            scenario,
            seed,
            num_frames,
        })
    }

    /// Uses the seed stored in the scenario.
    pub fn from_scenario(scenario: ScenarioConfig) -> Result<Self> {
        let seed = scenario.seed;
        Self::new(scenario, seed)
    }

    pub fn with_num_frames(mut self, n: usize) -> Self {
        self.num_frames = n;
        self
    }

    pub fn scenario(&self) -> &ScenarioConfig {
        &self.scenario
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl DetectionSource for SyntheticSource {
    fn num_frames(&self) -> usize {
        self.num_frames
    }

    fn frame_size(&self) -> (u32, u32) {
        (self.scenario.width, self.scenario.height)
    }

    fn fps(&self) -> f64 {
        self.scenario.fps
    }

    fn embedding_dim(&self) -> usize {
        self.scenario.embedding_dim
    }

    fn infer(&self, frame: &FramePacket) -> Result<RawModelOutput> {
        Ok(generate_frame(&self.scenario, frame.index, self.seed).output)
    }
}

/// Detector stand-in replaying detections loaded from disk.
#[derive(Debug, Clone)]
pub struct FileSource {
    frames: BTreeMap<usize, RawModelOutput>,
    num_frames: usize,
    embedding_dim: usize,
    size: (u32, u32),
    fps: f64,
}

impl FileSource {
    /// `num_frames` defaults to one past the last frame with detections.
    pub fn new(
        frames: BTreeMap<usize, RawModelOutput>,
        embedding_dim: usize,
        num_frames: Option<usize>,
    ) -> Result<Self> {
        if let Some((&f, out)) = frames.iter().find(|(_, o)| o.embedding_dim() != embedding_dim) {
            return Err(Error::Consistency(format!(
                "frame {f} carries {}-wide embeddings, expected {embedding_dim}",
                out.embedding_dim()
            )));
        }
        let last = frames.keys().next_back().map_or(0, |&f| f + 1);
        Ok(FileSource {
            frames,
            num_frames: num_frames.unwrap_or(last),
            embedding_dim,
            size: (1920, 1080),
            fps: 30.0,
        })
    }

    pub fn with_frame_size(mut self, width: u32, height: u32) -> Self {
        self.size = (width, height);
        self
    }
}

impl DetectionSource for FileSource {
    fn num_frames(&self) -> usize {
        self.num_frames
    }

    fn frame_size(&self) -> (u32, u32) {
        self.size
    }

    fn fps(&self) -> f64 {
        self.fps
    }

    fn embedding_dim(&self) -> usize {
        self.embedding_dim
    }

    fn infer(&self, frame: &FramePacket) -> Result<RawModelOutput> {
        Ok(self
            .frames
            .get(&frame.index)
            .cloned()
            .unwrap_or_else(|| RawModelOutput::empty(self.embedding_dim)))
    }
}
