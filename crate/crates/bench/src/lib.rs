//! Deterministic inputs for the hot-path benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trackforge_core::assoc::CostMatrix;
use trackforge_core::detgen::{NoiseConfig, ScenarioConfig};
use trackforge_core::postproc::parse_output;
use trackforge_core::{BoundingBox, Detection, DetectionSource, SyntheticSource, TrackerConfig};

/// Uniform costs in `[0, 1)` with roughly one forbidden cell in ten.
pub fn cost_matrix(rows: usize, cols: usize, seed: u64) -> CostMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows * cols)
        .map(|_| if rng.gen_bool(0.1) { f64::INFINITY } else { rng.gen() })
        .collect();
    CostMatrix::new(rows, cols, data).expect("sized to fit")
}

/// Clustered boxes so suppression has work to do.
pub fn boxes(n: usize, seed: u64) -> (Vec<BoundingBox>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<(f64, f64)> = (0..n.div_ceil(4).max(1))
        .map(|_| (rng.gen_range(0.0..1800.0), rng.gen_range(0.0..1000.0)))
        .collect();
    let b = (0..n)
        .map(|i| {
            let (cx, cy) = centers[i % centers.len()];
            BoundingBox::new(
                cx + rng.gen_range(-10.0..10.0),
                cy + rng.gen_range(-10.0..10.0),
                rng.gen_range(30.0..80.0),
                rng.gen_range(60.0..160.0),
            )
            .expect("positive size")
        })
        .collect();
    (b, (0..n).map(|_| rng.gen()).collect())
}

/// Per-frame detections of a lane scenario plus a matching tracker config.
pub fn sequence(objects: usize, frames: usize, dim: usize) -> (TrackerConfig, Vec<Vec<Detection>>) {
    let sc = ScenarioConfig::lanes(objects, frames, dim, NoiseConfig::default(), 1).expect("valid scenario");
    let src = SyntheticSource::new(sc, 1).expect("valid source");
    let dets = (0..frames)
        .map(|f| {
            let raw = src.infer(&src.capture(f)).expect("synthetic inference");
            parse_output(&raw, dim).expect("well-formed rows")
        })
        .collect();
    let cfg = TrackerConfig {
        embedding_dim: dim,
        ..TrackerConfig::default()
    };
    (cfg, dets)
}
