//! Deterministic synthetic scenes standing in for the detector.
//!
//! Every frame is a pure function of `(scenario, frame_index, seed)`: the
//! generator seeds a ChaCha stream from `seed` and selects the stream number
//! from the frame index, so frames can be produced in any order or in
//! parallel and still be bit-identical.

use std::collections::HashSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use super::raw::RawModelOutput;
use crate::embedding::{cosine_distance, normalize, Embedding, EMBEDDING_DIM};
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioObject {
    pub object_id: u32,
    pub spawn_frame: usize,
    /// First frame at which the object is gone.
    pub despawn_frame: usize,
    pub initial_box: BoundingBox,
    /// Pixels per frame.
    pub velocity: (f64, f64),
    pub identity_embedding: Embedding,
}

impl ScenarioObject {
    #[inline]
    pub fn is_live(&self, frame: usize) -> bool {
        self.spawn_frame <= frame && frame < self.despawn_frame
    }

    pub fn box_at(&self, frame: usize) -> BoundingBox {
        let dt = frame as f64 - self.spawn_frame as f64;
        self.initial_box
            .translated(self.velocity.0 * dt, self.velocity.1 * dt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    /// Gaussian jitter (pixels) applied to each of x, y, w, h.
    pub sigma_box: f64,
    /// Expected norm of the Gaussian perturbation added to the identity
    /// embedding; each component gets `sigma_emb / sqrt(dim)`.
    pub sigma_emb: f64,
    pub objectness_mean: f64,
    pub sigma_objectness: f64,
    pub p_miss: f64,
    /// Mean number of false positives per frame (Poisson).
    pub lambda_fp: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            sigma_box: 2.0,
            sigma_emb: 0.05,
            objectness_mean: 0.9,
            sigma_objectness: 0.05,
            p_miss: 0.05,
            lambda_fp: 0.5,
        }
    }
}

impl NoiseConfig {
    /// No jitter, no misses, no false positives.
    pub fn noiseless() -> Self {
        NoiseConfig {
            sigma_box: 0.0,
            sigma_emb: 0.0,
            objectness_mean: 0.9,
            sigma_objectness: 0.0,
            p_miss: 0.0,
            lambda_fp: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be finite and >= 0, got {v}")))
            }
        };
        nonneg("sigma_box", self.sigma_box)?;
        nonneg("sigma_emb", self.sigma_emb)?;
        nonneg("sigma_objectness", self.sigma_objectness)?;
        nonneg("lambda_fp", self.lambda_fp)?;
        for (name, v) in [("p_miss", self.p_miss), ("objectness_mean", self.objectness_mean)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub width: u32,
    pub height: u32,
    pub fps: f64,
    pub num_frames: usize,
    pub embedding_dim: usize,
    pub seed: u64,
    #[serde(default)]
    pub noise: NoiseConfig,
    pub objects: Vec<ScenarioObject>,
}

/// Detector output for one frame plus the boxes it was generated from.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSample {
    pub output: RawModelOutput,
    pub ground_truth: Vec<(u32, BoundingBox)>,
}

pub fn generate_frame(scenario: &ScenarioConfig, frame_index: usize, seed: u64) -> FrameSample {
    let dim = scenario.embedding_dim;
    let noise = &scenario.noise;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame_index as u64);

    let mut output = RawModelOutput::empty(dim);
    let mut ground_truth = Vec::new();
    let emb_sigma = if dim > 0 {
        noise.sigma_emb / (dim as f64).sqrt()
    } else {
        0.0
    };
    let mut emb_buf = vec![0f32; dim];

    for obj in scenario.objects.iter().filter(|o| o.is_live(frame_index)) {
        let truth = obj.box_at(frame_index);
        ground_truth.push((obj.object_id, truth));

        if rng.gen::<f64>() < noise.p_miss {
            continue;
        }
        let bbox = BoundingBox {
            x: truth.x + noise.sigma_box * gauss(&mut rng),
            y: truth.y + noise.sigma_box * gauss(&mut rng),
            w: (truth.w + noise.sigma_box * gauss(&mut rng)).max(1.0),
            h: (truth.h + noise.sigma_box * gauss(&mut rng)).max(1.0),
        };
        for (dst, &id) in emb_buf.iter_mut().zip(obj.identity_embedding.as_slice()) {
            *dst = (f64::from(id) + emb_sigma * gauss(&mut rng)) as f32;
        }
        let embedding = match normalize(&emb_buf) {
            Ok(e) => e,
            Err(_) => obj.identity_embedding.clone(),
        };
        let objectness =
            (noise.objectness_mean + noise.sigma_objectness * gauss(&mut rng)).clamp(0.0, 1.0);
        output
            .push_row(&bbox, objectness, 1.0, embedding.as_slice())
            .expect("embedding width fixed by scenario");
    }

    if noise.lambda_fp > 0.0 {
        let count = rng.sample(Poisson::new(noise.lambda_fp).expect("validated lambda")) as usize;
        for _ in 0..count {
            let bbox = random_box(&mut rng, scenario.width, scenario.height);
            let embedding = random_unit(&mut rng, dim);
            let objectness = rng.gen::<f64>();
            output
                .push_row(&bbox, objectness, 1.0, embedding.as_slice())
                .expect("embedding width fixed by scenario");
        }
    }

    FrameSample {
        output,
        ground_truth,
    }
}

#[inline]
fn gauss<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

fn random_box<R: Rng>(rng: &mut R, width: u32, height: u32) -> BoundingBox {
    let w = rng.gen_range(20.0..120.0);
    let h = w * rng.gen_range(1.5..3.0);
    let max_x = (f64::from(width) - w).max(1.0);
    let max_y = (f64::from(height) - h).max(1.0);
    BoundingBox {
        x: rng.gen_range(0.0..max_x),
        y: rng.gen_range(0.0..max_y),
        w,
        h,
    }
}

fn random_unit<R: Rng>(rng: &mut R, dim: usize) -> Embedding {
    loop {
        let v: Vec<f32> = (0..dim).map(|_| gauss(rng) as f32).collect();
        if let Ok(e) = normalize(&v) {
            return e;
        }
        if dim == 0 {
            return Embedding::zeros(0);
        }
    }
}

/// Parameters for [`ScenarioConfig::synthesize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub objects: usize,
    pub frames: usize,
    pub width: u32,
    pub height: u32,
    pub fps: f64,
    pub embedding_dim: usize,
    pub seed: u64,
    pub noise: NoiseConfig,
    /// Minimum pairwise cosine distance between identity embeddings.
    pub separation_margin: f64,
    pub min_height: f64,
    pub max_height: f64,
    /// Maximum speed per axis, pixels per frame.
    pub max_speed: f64,
    /// Spread spawn/despawn over the sequence instead of living throughout.
    pub staggered: bool,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            objects: 10,
            frames: 300,
            width: 1920,
            height: 1080,
            fps: 30.0,
            embedding_dim: EMBEDDING_DIM,
            seed: 0,
            noise: NoiseConfig::default(),
            separation_margin: 0.5,
            min_height: 60.0,
            max_height: 160.0,
            max_speed: 4.0,
            staggered: false,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        if self.frames == 0 {
            return Err(Error::Config("frame count must be positive".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("frame size must be positive".into()));
        }
        if !(self.fps > 0.0) {
            return Err(Error::Config("fps must be positive".into()));
        }
        if !(self.separation_margin >= 0.0 && self.separation_margin <= 2.0) {
            return Err(Error::Config("separation margin must lie in [0, 2]".into()));
        }
        if !(self.min_height > 0.0 && self.min_height <= self.max_height) {
            return Err(Error::Config("need 0 < min_height <= max_height".into()));
        }
        if !(self.max_speed >= 0.0) {
            return Err(Error::Config("max_speed must be >= 0".into()));
        }
        if self.embedding_dim == 0 {
            return Err(Error::Config("embedding_dim must be positive".into()));
        }
        Ok(())
    }
}

/// Draws `count` identity embeddings whose pairwise cosine distance is at
/// least `margin`, rejecting candidates that come too close to earlier ones.
pub fn identity_embeddings<R: Rng>(
    rng: &mut R,
    count: usize,
    dim: usize,
    margin: f64,
) -> Result<Vec<Embedding>> {
    const MAX_TRIES: usize = 10_000;
    let mut out: Vec<Embedding> = Vec::with_capacity(count);
    for _ in 0..count {
        let mut accepted = None;
        for _ in 0..MAX_TRIES {
            let cand = random_unit(rng, dim);
            let ok = out
                .iter()
                .all(|e| cosine_distance(e, &cand).map_or(false, |d| d >= margin));
            if ok {
                accepted = Some(cand);
                break;
            }
        }
        match accepted {
            Some(e) => out.push(e),
            None => {
                return Err(Error::Config(format!(
                    "could not place {count} embeddings of dim {dim} with separation {margin}"
                )))
            }
        }
    }
    Ok(out)
}

impl ScenarioConfig {
    /// Random scene: boxes and velocities uniform within the frame.
    pub fn synthesize(params: &SynthParams) -> Result<Self> {
        params.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let embeddings = identity_embeddings(
            &mut rng,
            params.objects,
            params.embedding_dim,
            params.separation_margin,
        )?;
        let (fw, fh) = (f64::from(params.width), f64::from(params.height));
        let mut objects = Vec::with_capacity(params.objects);
        for (i, identity_embedding) in embeddings.into_iter().enumerate() {
            let h = if params.max_height > params.min_height {
                rng.gen_range(params.min_height..params.max_height)
            } else {
                params.min_height
            };
            let w = h * rng.gen_range(0.35..0.5);
            let x = rng.gen_range(0.0..(fw - w).max(1.0));
            let y = rng.gen_range(0.0..(fh - h).max(1.0));
            let velocity = if params.max_speed > 0.0 {
                (
                    rng.gen_range(-params.max_speed..=params.max_speed),
                    rng.gen_range(-params.max_speed..=params.max_speed) * 0.25,
                )
            } else {
                (0.0, 0.0)
            };
            let (spawn_frame, despawn_frame) = if params.staggered && params.frames > 4 {
                let spawn = rng.gen_range(0..params.frames / 2);
                let life = rng.gen_range(params.frames / 4..=params.frames);
                (spawn, (spawn + life.max(1)).min(params.frames))
            } else {
                (0, params.frames)
            };
            objects.push(ScenarioObject {
                object_id: i as u32 + 1,
                spawn_frame,
                despawn_frame,
                initial_box: BoundingBox { x, y, w, h },
                velocity,
                identity_embedding,
            });
        }
        Ok(ScenarioConfig {
            width: params.width,
            height: params.height,
            fps: params.fps,
            num_frames: params.frames,
            embedding_dim: params.embedding_dim,
            seed: params.seed,
            noise: params.noise,
            objects,
        })
    }

    /// Objects confined to disjoint horizontal lanes (at most two per lane,
    /// moving with the lane's common velocity), so no two boxes ever overlap.
    pub fn lanes(
        objects: usize,
        frames: usize,
        embedding_dim: usize,
        noise: NoiseConfig,
        seed: u64,
    ) -> Result<Self> {
        let (width, height) = (1920u32, 1080u32);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let embeddings = identity_embeddings(&mut rng, objects, embedding_dim, 0.5)?;
        let lanes = objects.div_ceil(2).max(1);
        let lane_h = f64::from(height) / lanes as f64;
        let h = 0.8 * lane_h;
        let w = 0.4 * h;
        let objs = embeddings
            .into_iter()
            .enumerate()
            .map(|(i, identity_embedding)| {
                let lane = i % lanes;
                let column = i / lanes;
                let vx = 1.0 + 0.25 * (lane % 4) as f64;
                ScenarioObject {
                    object_id: i as u32 + 1,
                    spawn_frame: 0,
                    despawn_frame: frames,
                    initial_box: BoundingBox {
                        x: 40.0 + column as f64 * f64::from(width) / 2.0,
                        y: lane as f64 * lane_h + 0.1 * lane_h,
                        w,
                        h,
                    },
                    velocity: (vx, 0.0),
                    identity_embedding,
                }
            })
            .collect();
        let cfg = ScenarioConfig {
            width,
            height,
            fps: 30.0,
            num_frames: frames,
            embedding_dim,
            seed,
            noise,
            objects: objs,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        if !(self.fps > 0.0) {
            return Err(Error::Config("fps must be positive".into()));
        }
        let mut ids = HashSet::new();
        for o in &self.objects {
            if o.object_id == 0 || !ids.insert(o.object_id) {
                return Err(Error::Config(format!(
                    "object ids must be unique and positive (offending id {})",
                    o.object_id
                )));
            }
            if o.spawn_frame >= o.despawn_frame {
                return Err(Error::Config(format!(
                    "object {} spawns at {} but despawns at {}",
                    o.object_id, o.spawn_frame, o.despawn_frame
                )));
            }
            o.initial_box.validate()?;
            if o.identity_embedding.dim() != self.embedding_dim {
                return Err(Error::Dimension {
                    expected: self.embedding_dim,
                    actual: o.identity_embedding.dim(),
                });
            }
        }
        Ok(())
    }

    pub fn ground_truth(&self, frame: usize) -> Vec<(u32, BoundingBox)> {
        self.objects
            .iter()
            .filter(|o| o.is_live(frame))
            .map(|o| (o.object_id, o.box_at(frame)))
            .collect()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string()?).map_err(|e| Error::io(path, e))
    }
}
