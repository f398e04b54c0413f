use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use super::batcher::batcher;
use super::queue::{Received, StageQueue};
use super::report::{measure_fps, FrameTiming, RunReport};
use super::{ModeKind, PipelineConfig, PipelineMode};
use crate::detgen::{emulate_delay, emulated_latency, DetectionSource, FramePacket, LatencyModel, RawModelOutput};
use crate::error::{Error, Result};
use crate::postproc::parse_output;
use crate::precision::Precision;
use crate::tracker::{Tracker, TrackerOutput};

/// Runs `source` through `tracker` under `mode`.
///
/// The output stream depends only on the source and the tracker
/// configuration, never on the mode's batching or concurrency.
pub fn run<S>(
    source: &S,
    tracker: &mut Tracker,
    mode: PipelineMode,
    config: &PipelineConfig,
) -> Result<(Vec<TrackerOutput>, RunReport)>
where
    S: DetectionSource + ?Sized,
{
    mode.validate()?;
    config.validate()?;
    let stages = Stages {
        source,
        model: config.latency.model(mode.precision),
        precision: mode.precision,
        config,
    };
    let contexts = config.max_contexts.unwrap_or(3).min(3);
    let t0 = Instant::now();
    let c = match mode.kind {
        ModeKind::Parallel if contexts > 1 => run_parallel(&stages, tracker, mode.batch_size, contexts == 3, t0)?,
        _ => run_serialized(&stages, tracker, mode.batch_size, t0)?,
    };
    let m = measure_fps(&c.timings, config.warmup_frames)?;
    let report = RunReport {
        mode,
        frames: m.frames,
        total_frames: c.outputs.len(),
        warmup_frames: m.warmup,
        seconds: m.seconds,
        fps: m.fps,
        capture_busy_s: c.busy[0].as_secs_f64(),
        inference_busy_s: c.busy[1].as_secs_f64(),
        post_busy_s: c.busy[2].as_secs_f64(),
        max_q1: c.max_q1,
        max_q2: c.max_q2,
    };
    Ok((c.outputs, report))
}

struct Stages<'a, S: ?Sized> {
    source: &'a S,
    model: LatencyModel,
    precision: Precision,
    config: &'a PipelineConfig,
}

#[derive(Default)]
struct Collected {
    outputs: Vec<TrackerOutput>,
    timings: Vec<FrameTiming>,
    busy: [Duration; 3],
    max_q1: usize,
    max_q2: usize,
}

impl<S: DetectionSource + ?Sized> Stages<'_, S> {
    fn capture(&self, index: usize, busy: &mut Duration) -> FramePacket {
        let start = Instant::now();
        let p = self.source.capture(index);
        *busy += start.elapsed();
        p
    }

    /// One forward pass over `frames`. Generating the outputs counts toward
    /// the emulated latency, so the stage takes the modelled time unless the
    /// source itself is slower.
    fn infer(&self, frames: &[FramePacket], busy: &mut Duration) -> Result<Vec<RawModelOutput>> {
        let start = Instant::now();
        let ms = emulated_latency(&self.model, frames.len())?;
        let deadline = start + Duration::from_secs_f64(ms / 1000.0);
        let mut outs = frames
            .iter()
            .map(|f| self.source.infer(f))
            .collect::<Result<Vec<_>>>()?;
        if self.precision == Precision::Mixed {
            for o in &mut outs {
                o.quantize_embeddings()?;
            }
        }
        let left = deadline.saturating_duration_since(Instant::now());
        emulate_delay(left.as_secs_f64() * 1000.0, self.config.busy_wait);
        *busy += start.elapsed();
        Ok(outs)
    }

    /// Parse, track, then pay the emulated per-frame post-processing cost.
    fn post(
        &self,
        tracker: &mut Tracker,
        index: usize,
        raw: &RawModelOutput,
        busy: &mut Duration,
    ) -> Result<TrackerOutput> {
        let start = Instant::now();
        let dets = parse_output(raw, tracker.config().embedding_dim)?;
        let out = tracker.step(index, dets)?;
        emulate_delay(self.config.post_cost.frame_ms(raw.num_rows()), self.config.busy_wait);
        *busy += start.elapsed();
        Ok(out)
    }
}

fn run_serialized<S: DetectionSource + ?Sized>(
    st: &Stages<'_, S>,
    tracker: &mut Tracker,
    batch_size: usize,
    t0: Instant,
) -> Result<Collected> {
    let n = st.source.num_frames();
    let mut c = Collected::default();
    let [cap_busy, inf_busy, post_busy] = &mut c.busy;
    for start in (0..n).step_by(batch_size) {
        let end = (start + batch_size).min(n);
        let mut packets = Vec::with_capacity(end - start);
        let mut captured = Vec::with_capacity(end - start);
        for i in start..end {
            captured.push(t0.elapsed());
            packets.push(st.capture(i, cap_busy));
        }
        let raws = st.infer(&packets, inf_busy)?;
        for ((p, raw), cap) in packets.iter().zip(&raws).zip(captured) {
            c.outputs.push(st.post(tracker, p.index, raw, post_busy)?);
            c.timings.push(FrameTiming {
                frame_index: p.index,
                captured: cap,
                emitted: t0.elapsed(),
            });
        }
    }
    Ok(c)
}

struct Captured {
    packet: FramePacket,
    captured: Duration,
}

struct Inferred {
    packet: FramePacket,
    captured: Duration,
    raw: RawModelOutput,
}

/// State visible to every stage: the two queues and the first failure.
struct Shared {
    q1: StageQueue<Captured>,
    q2: StageQueue<Inferred>,
    first_error: Mutex<Option<Error>>,
}

impl Shared {
    fn fail(&self, e: Error) {
        {
            let mut slot = self.first_error.lock().unwrap_or_else(|p| p.into_inner());
            if slot.is_none() {
                *slot = Some(e);
            }
        }
        self.q1.abort();
        self.q2.abort();
    }

    /// Records a stage's error and turns it into `None`.
    fn settle<T>(&self, r: Result<T>) -> Option<T> {
        r.map_err(|e| self.fail(e)).ok()
    }
}

/// Aborts both queues if its stage unwinds, so neighbours never block forever.
struct PanicGuard<'a> {
    stage: &'static str,
    shared: &'a Shared,
}

impl Drop for PanicGuard<'_> {
    fn drop(&mut self) {
        if thread::panicking() {
            self.shared.fail(Error::StagePanic(self.stage));
        }
    }
}

fn run_parallel<S: DetectionSource + ?Sized>(
    st: &Stages<'_, S>,
    tracker: &mut Tracker,
    batch_size: usize,
    separate_capture: bool,
    t0: Instant,
) -> Result<Collected> {
    let n = st.source.num_frames();
    let shared = Shared {
        q1: StageQueue::new(st.config.q1_capacity)?,
        q2: StageQueue::new(st.config.q2_capacity)?,
        first_error: Mutex::new(None),
    };
    let sh = &shared;

    let (cap_busy, inf_busy, post) = thread::scope(|s| {
        let capture = separate_capture.then(|| {
            s.spawn(move || {
                let _guard = PanicGuard { stage: "capture", shared: sh };
                let mut busy = Duration::ZERO;
                let r = (|| {
                    for i in 0..n {
                        let captured = t0.elapsed();
                        let packet = st.capture(i, &mut busy);
                        sh.q1.send(Captured { packet, captured })?;
                    }
                    sh.q1.close();
                    Ok(())
                })();
                sh.settle(r);
                busy
            })
        });

        let inference = s.spawn(move || {
            let _guard = PanicGuard { stage: "inference", shared: sh };
            let mut cap_busy = Duration::ZERO;
            let mut busy = Duration::ZERO;
            let forward = |batch: Vec<Captured>, busy: &mut Duration| -> Result<()> {
                let packets: Vec<FramePacket> = batch.iter().map(|c| c.packet).collect();
                let raws = st.infer(&packets, busy)?;
                for (c, raw) in batch.into_iter().zip(raws) {
                    sh.q2.send(Inferred {
                        packet: c.packet,
                        captured: c.captured,
                        raw,
                    })?;
                }
                Ok(())
            };
            let r = (|| {
                if separate_capture {
                    for batch in batcher(&sh.q1, batch_size, true)? {
                        forward(batch?, &mut busy)?;
                    }
                } else {
                    // capture folded into this context
                    for start in (0..n).step_by(batch_size) {
                        let batch = (start..(start + batch_size).min(n))
                            .map(|i| {
                                let captured = t0.elapsed();
                                Captured {
                                    packet: st.capture(i, &mut cap_busy),
                                    captured,
                                }
                            })
                            .collect();
                        forward(batch, &mut busy)?;
                    }
                }
                sh.q2.close();
                Ok(())
            })();
            sh.settle(r);
            (cap_busy, busy)
        });

        let post = s.spawn(move || {
            let _guard = PanicGuard { stage: "post-processing", shared: sh };
            let mut c = Collected::default();
            let r = (|| {
                loop {
                    let m = match sh.q2.recv()? {
                        Received::Item(m) => m,
                        Received::End => break,
                    };
                    let expected = c.outputs.len();
                    if m.packet.index != expected {
                        return Err(Error::Stage {
                            stage: "post-processing",
                            message: format!("expected frame {expected}, got {}", m.packet.index),
                        });
                    }
                    c.outputs.push(st.post(tracker, m.packet.index, &m.raw, &mut c.busy[2])?);
                    c.timings.push(FrameTiming {
                        frame_index: m.packet.index,
                        captured: m.captured,
                        emitted: t0.elapsed(),
                    });
                }
                if c.outputs.len() != n {
                    return Err(Error::Stage {
                        stage: "post-processing",
                        message: format!("{} of {n} frames arrived", c.outputs.len()),
                    });
                }
                Ok(())
            })();
            sh.settle(r);
            c
        });

        // a panicked stage has already recorded itself through its guard
        let cap_busy = capture.and_then(|h| h.join().ok()).unwrap_or_default();
        let inf = inference.join().unwrap_or_default();
        let post = post.join().unwrap_or_default();
        (cap_busy + inf.0, inf.1, post)
    });

    if let Some(e) = shared.first_error.into_inner().unwrap_or_else(|p| p.into_inner()) {
        return Err(e);
    }
    let mut c = post;
    c.busy[0] = cap_busy;
    c.busy[1] = inf_busy;
    c.max_q1 = shared.q1.max_occupancy();
    c.max_q2 = shared.q2.max_occupancy();
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detgen::{LatencyProfile, NoiseConfig, ScenarioConfig, SyntheticSource};
    use crate::pipeline::PostCostModel;
    use crate::tracker::TrackerConfig;

    fn fast_config(dim: usize) -> PipelineConfig {
        PipelineConfig {
            tracker: TrackerConfig {
                embedding_dim: dim,
                ..TrackerConfig::default()
            },
            latency: LatencyProfile {
                t_fixed_ms: 0.01,
                t_image_ms: 0.01,
                ..LatencyProfile::default()
            },
            post_cost: PostCostModel::none(),
            warmup_frames: 0,
            ..PipelineConfig::default()
        }
    }

    fn source(frames: usize) -> SyntheticSource {
        let sc = ScenarioConfig::lanes(6, frames, 32, NoiseConfig::default(), 3).unwrap();
        SyntheticSource::new(sc, 3).unwrap()
    }

    fn go(src: &SyntheticSource, mode: PipelineMode, cfg: &PipelineConfig) -> Result<(Vec<TrackerOutput>, RunReport)> {
        let mut t = Tracker::new(cfg.tracker.clone()).unwrap();
        run(src, &mut t, mode, cfg)
    }

    #[test]
    fn modes_agree() {
        let src = source(60);
        let cfg = fast_config(32);
        let (base, rep) = go(&src, PipelineMode::serial(Precision::Full), &cfg).unwrap();
        assert_eq!(base.len(), 60);
        assert_eq!(rep.total_frames, 60);
        assert_eq!((rep.max_q1, rep.max_q2), (0, 0));
        for b in [1, 3, 8] {
            let (o, _) = go(&src, PipelineMode::batched(Precision::Full, b).unwrap(), &cfg).unwrap();
            assert_eq!(o, base);
            let (o, r) = go(&src, PipelineMode::parallel(Precision::Full, b).unwrap(), &cfg).unwrap();
            assert_eq!(o, base);
            assert!(r.max_q1 <= cfg.q1_capacity && r.max_q2 <= cfg.q2_capacity);
        }
    }

    #[test]
    fn context_caps_keep_output() {
        let src = source(30);
        let mut cfg = fast_config(32);
        let (base, _) = go(&src, PipelineMode::serial(Precision::Mixed), &cfg).unwrap();
        for cap in [1, 2] {
            cfg.max_contexts = Some(cap);
            let (o, r) = go(&src, PipelineMode::parallel(Precision::Mixed, 4).unwrap(), &cfg).unwrap();
            assert_eq!(o, base);
            assert_eq!(r.max_q1, 0);
        }
    }

    #[test]
    fn layout_error_propagates_from_post() {
        let src = source(20);
        let mut cfg = fast_config(32);
        cfg.tracker.embedding_dim = 16;
        let mode = PipelineMode::parallel(Precision::Full, 2).unwrap();
        let mut t = Tracker::new(cfg.tracker.clone()).unwrap();
        assert!(matches!(run(&src, &mut t, mode, &cfg), Err(Error::Layout { .. })));
    }

    struct Exploding(SyntheticSource, usize);

    impl DetectionSource for Exploding {
        fn num_frames(&self) -> usize {
            self.0.num_frames()
        }
        fn frame_size(&self) -> (u32, u32) {
            self.0.frame_size()
        }
        fn embedding_dim(&self) -> usize {
            self.0.embedding_dim()
        }
        fn infer(&self, frame: &FramePacket) -> Result<RawModelOutput> {
            if frame.index == self.1 {
                panic!("boom");
            }
            self.0.infer(frame)
        }
    }

    #[test]
    fn stage_panic_aborts_cleanly() {
        let src = Exploding(source(200), 50);
        let mut cfg = fast_config(32);
        cfg.q1_capacity = 2;
        cfg.q2_capacity = 2;
        let mut t = Tracker::new(cfg.tracker.clone()).unwrap();
        let r = run(&src, &mut t, PipelineMode::parallel(Precision::Full, 1).unwrap(), &cfg);
        assert!(matches!(r, Err(Error::StagePanic("inference"))));
    }

    #[test]
    fn empty_source_is_a_measurement_error() {
        let src = source(5).with_num_frames(0);
        let cfg = fast_config(32);
        assert!(matches!(
            go(&src, PipelineMode::parallel(Precision::Full, 2).unwrap(), &cfg),
            Err(Error::Measurement(_))
        ));
    }
}
