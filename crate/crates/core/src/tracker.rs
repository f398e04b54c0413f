//! Per-frame tracking step and the track lifecycle.
//!
//! ```text
//!   birth ──> Active <──> Lost ──> Removed
//! ```
//!
//! A track that goes unmatched becomes Lost in that same frame. Once it has
//! been unmatched for `max_lost + 1` consecutive frames it is Removed and
//! never considered again.

use serde::{Deserialize, Serialize};

use crate::assoc::{apply_gate, build_cost_matrix, hungarian_solve, match_with_threshold, CostMatrix};
use crate::detection::Detection;
use crate::embedding::{Embedding, EMBEDDING_DIM};
use crate::error::{Error, Result};
use crate::geometry::{box_to_measurement, measurement_to_box, BoundingBox, Measurement};
use crate::motion::{center_distance_sq, KalmanFilter, KalmanState, MotionNoise, CHI2_95_4DOF};
use crate::postproc::{filter_confidence, nms};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackState {
    Active,
    Lost,
    Removed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateMetric {
    /// Squared Mahalanobis distance in measurement space.
    Mahalanobis,
    /// Pixel distance between predicted and measured centers.
    Euclidean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    pub objectness_threshold: f64,
    pub nms_iou_threshold: f64,
    pub gate_metric: GateMetric,
    /// Squared Mahalanobis bound, or pixels for the Euclidean metric.
    pub gate_threshold: f64,
    /// Largest cosine distance accepted for a track/detection pair.
    pub max_cost: f64,
    /// Weight of the previous embedding when smoothing.
    pub smoothing_alpha: f64,
    pub max_lost: usize,
    /// Updates needed before a track is reported; 1 reports immediately.
    pub min_hits: u32,
    pub embedding_dim: usize,
    pub motion: MotionNoise,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            objectness_threshold: 0.5,
            nms_iou_threshold: 0.4,
            gate_metric: GateMetric::Mahalanobis,
            gate_threshold: CHI2_95_4DOF,
            max_cost: 0.7,
            smoothing_alpha: 0.9,
            max_lost: 30,
            min_hits: 1,
            embedding_dim: EMBEDDING_DIM,
            motion: MotionNoise::default(),
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        unit("objectness_threshold", self.objectness_threshold)?;
        unit("smoothing_alpha", self.smoothing_alpha)?;
        if !(self.nms_iou_threshold > 0.0 && self.nms_iou_threshold < 1.0) {
            return Err(Error::Config(format!(
                "nms_iou_threshold must lie in (0, 1), got {}",
                self.nms_iou_threshold
            )));
        }
        if !(self.gate_threshold > 0.0) {
            return Err(Error::Config("gate_threshold must be positive".into()));
        }
        if !(self.max_cost >= 0.0) {
            return Err(Error::Config("max_cost must be >= 0".into()));
        }
        if self.embedding_dim == 0 {
            return Err(Error::Config("embedding_dim must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub track_id: u64,
    pub state: TrackState,
    pub kalman: KalmanState,
    pub smooth_embedding: Embedding,
    pub last_update_frame: usize,
    pub lost_since: Option<usize>,
    pub hits: u32,
    pub objectness: f64,
}

impl Track {
    pub fn bbox(&self) -> Result<BoundingBox> {
        measurement_to_box(&self.kalman.measurement())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackOutput {
    pub track_id: u64,
    pub bbox: BoundingBox,
    pub objectness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackerOutput {
    pub frame_index: usize,
    pub tracks: Vec<TrackOutput>,
}

/// Bookkeeping for the most recent [`Tracker::step`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepStats {
    pub input_detections: usize,
    pub after_confidence: usize,
    pub after_nms: usize,
    pub candidate_tracks: usize,
    pub matched: usize,
    pub newly_lost: usize,
    pub removed: usize,
    pub unmatched_detections: usize,
    pub spawned: usize,
}

/// `normalize(alpha * old + (1 - alpha) * new)`.
pub fn smooth_embedding(old: &Embedding, new: &Embedding, alpha: f64) -> Result<Embedding> {
    if old.dim() != new.dim() {
        return Err(Error::Dimension {
            expected: old.dim(),
            actual: new.dim(),
        });
    }
    if alpha == 1.0 {
        return Ok(old.clone());
    }
    if alpha == 0.0 {
        return Ok(new.clone());
    }
    let mixed: Vec<f32> = old
        .as_slice()
        .iter()
        .zip(new.as_slice())
        .map(|(&o, &n)| (alpha * f64::from(o) + (1.0 - alpha) * f64::from(n)) as f32)
        .collect();
    let norm = mixed.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>().sqrt();
    if norm < 1e-6 {
        return Err(Error::DegenerateEmbedding(format!(
            "smoothed embedding norm {norm} is near zero"
        )));
    }
    crate::embedding::normalize(&mixed)
}

#[derive(Debug, Clone)]
pub struct Tracker {
    config: TrackerConfig,
    kf: KalmanFilter,
    tracks: Vec<Track>,
    removed: Vec<Track>,
    next_id: u64,
    last_frame: Option<usize>,
    stats: StepStats,
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Tracker {
            kf: KalmanFilter::new(config.motion),
            config,
            tracks: Vec::new(),
            removed: Vec::new(),
            next_id: 1,
            last_frame: None,
            stats: StepStats::default(),
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    /// Active and Lost tracks, in creation order.
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn removed_tracks(&self) -> &[Track] {
        &self.removed
    }

    pub fn last_stats(&self) -> StepStats {
        self.stats
    }

    pub fn last_frame(&self) -> Option<usize> {
        self.last_frame
    }

    /// Runs one frame of post-processing over already-parsed detections.
    pub fn step(&mut self, frame_index: usize, detections: Vec<Detection>) -> Result<TrackerOutput> {
        if let Some(prev) = self.last_frame {
            if frame_index <= prev {
                return Err(Error::FrameOrder {
                    previous: prev,
                    got: frame_index,
                });
            }
        }
        for d in &detections {
            if d.embedding.dim() != self.config.embedding_dim {
                return Err(Error::Dimension {
                    expected: self.config.embedding_dim,
                    actual: d.embedding.dim(),
                });
            }
        }
        self.last_frame = Some(frame_index);
        let mut stats = StepStats {
            input_detections: detections.len(),
            ..StepStats::default()
        };

        let dets = filter_confidence(detections, self.config.objectness_threshold);
        stats.after_confidence = dets.len();
        let dets = nms(dets, self.config.nms_iou_threshold);
        stats.after_nms = dets.len();

        for t in &mut self.tracks {
            t.kalman = self.kf.predict(&t.kalman);
        }
        stats.candidate_tracks = self.tracks.len();

        let measurements = dets
            .iter()
            .map(|d| box_to_measurement(&d.bbox))
            .collect::<Result<Vec<Measurement>>>()?;
        let track_embs: Vec<&Embedding> = self.tracks.iter().map(|t| &t.smooth_embedding).collect();
        let det_embs: Vec<&Embedding> = dets.iter().map(|d| &d.embedding).collect();
        let cost = build_cost_matrix(&track_embs, &det_embs)?;
        let gated = apply_gate(&cost, &self.gate_matrix(&measurements)?, self.gate_bound())?;
        let assignment = match_with_threshold(hungarian_solve(&gated), self.config.max_cost);

        for m in &assignment.matches {
            let det = &dets[m.detection];
            let track = &mut self.tracks[m.track];
            track.kalman = self.kf.update(&track.kalman, &measurements[m.detection])?;
            track.smooth_embedding =
                smooth_embedding(&track.smooth_embedding, &det.embedding, self.config.smoothing_alpha)?;
            track.state = TrackState::Active;
            track.lost_since = None;
            track.last_update_frame = frame_index;
            track.hits = track.hits.saturating_add(1);
            track.objectness = det.objectness;
        }
        stats.matched = assignment.matches.len();

        for &ti in &assignment.unmatched_tracks {
            let track = &mut self.tracks[ti];
            if track.state == TrackState::Active {
                track.state = TrackState::Lost;
                track.lost_since = Some(frame_index);
                stats.newly_lost += 1;
            }
        }

        let max_lost = self.config.max_lost;
        let (keep, gone): (Vec<Track>, Vec<Track>) =
            std::mem::take(&mut self.tracks).into_iter().partition(|t| {
                t.lost_since
                    .map_or(true, |since| frame_index - since < max_lost)
            });
        self.tracks = keep;
        stats.removed = gone.len();
        self.removed.extend(gone.into_iter().map(|mut t| {
            t.state = TrackState::Removed;
            t
        }));

        stats.unmatched_detections = assignment.unmatched_detections.len();
        let mut dets: Vec<Option<Detection>> = dets.into_iter().map(Some).collect();
        for &di in &assignment.unmatched_detections {
            let det = dets[di].take().expect("each detection used once");
            let kalman = self.kf.initiate(&measurements[di])?;
            self.tracks.push(Track {
                track_id: self.next_id,
                state: TrackState::Active,
                kalman,
                smooth_embedding: det.embedding,
                last_update_frame: frame_index,
                lost_since: None,
                hits: 1,
                objectness: det.objectness,
            });
            self.next_id += 1;
            stats.spawned += 1;
        }
        self.stats = stats;

        let mut tracks = self
            .tracks
            .iter()
            .filter(|t| t.state == TrackState::Active && t.hits >= self.config.min_hits)
            .map(|t| {
                Ok(TrackOutput {
                    track_id: t.track_id,
                    bbox: t.bbox()?,
                    objectness: t.objectness,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        tracks.sort_by_key(|t| t.track_id);
        Ok(TrackerOutput {
            frame_index,
            tracks,
        })
    }

    fn gate_bound(&self) -> f64 {
        match self.config.gate_metric {
            GateMetric::Mahalanobis => self.config.gate_threshold,
            GateMetric::Euclidean => self.config.gate_threshold * self.config.gate_threshold,
        }
    }

    fn gate_matrix(&self, measurements: &[Measurement]) -> Result<CostMatrix> {
        let mut data = Vec::with_capacity(self.tracks.len() * measurements.len());
        for t in &self.tracks {
            match self.config.gate_metric {
                GateMetric::Mahalanobis => data.extend(self.kf.gating_distance(&t.kalman, measurements)?),
                GateMetric::Euclidean => data.extend(center_distance_sq(&t.kalman, measurements)),
            }
        }
        CostMatrix::new(self.tracks.len(), measurements.len(), data)
    }
}
