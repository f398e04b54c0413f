//! Detection sources: synthetic scenes, MOT detection files with embedding
//! sidecars, and the forward-pass latency model.

pub mod latency;
pub mod mot;
pub mod raw;
pub mod scenario;
pub mod sidecar;
pub mod source;

pub use latency::{emulate_delay, emulated_latency, LatencyModel, LatencyProfile};
pub use mot::{load_mot_detections, load_mot_tracks, write_mot_ground_truth, write_mot_results, TrackTable};
pub use raw::{RawModelOutput, ROW_PREFIX};
pub use scenario::{
    generate_frame, identity_embeddings, FrameSample, NoiseConfig, ScenarioConfig, ScenarioObject,
    SynthParams,
};
pub use sidecar::{attach_embeddings, load_embedding_sidecar, Sidecar, SidecarRecord};
pub use source::{DetectionSource, FileSource, FramePacket, SyntheticSource};
