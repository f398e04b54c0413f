use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use trackforge_core::detgen::{
    attach_embeddings, load_mot_detections, load_mot_tracks, write_mot_ground_truth, write_mot_results,
    NoiseConfig, Sidecar, SynthParams,
};
use trackforge_core::moteval::{self, MotMetrics};
use trackforge_core::pipeline::{self, ModeKind, PipelineMode};
use trackforge_core::{
    DetectionSource, FileSource, PipelineConfig, Precision, RunReport, ScenarioConfig, SyntheticSource,
    Tracker, TrackerOutput,
};

use crate::failure::{io_failure, Failure};
use crate::{usage, BenchArgs, EvalArgs, RuntimeArgs, SourceArgs, SynthArgs, TrackArgs};

type CmdResult<T = ()> = Result<T, Failure>;

pub const THREADS_ENV: &str = "TRACKFORGE_THREADS";

fn create(path: &Path) -> CmdResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| io_failure(path, e))
}

/// Writes to `path`, or stdout when absent.
fn with_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> CmdResult {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            f(&mut w).and_then(|_| w.flush()).map_err(|e| io_failure(p, e))
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            f(&mut w).and_then(|_| w.flush()).map_err(|e| Failure::Internal(format!("stdout: {e}")))
        }
    }
}

fn load_source(a: &SourceArgs) -> CmdResult<Box<dyn DetectionSource>> {
    if let Some(path) = &a.scenario {
        let sc = ScenarioConfig::load(path)?;
        let seed = a.seed.unwrap_or(sc.seed);
        let total = sc.num_frames;
        let src = SyntheticSource::new(sc, seed)?;
        let src = match a.frames {
            Some(n) => src.with_num_frames(n.min(total)),
            None => src,
        };
        return Ok(Box::new(src));
    }
    match (&a.detections, &a.embeddings) {
        (Some(det), Some(emb)) => {
            let dets = load_mot_detections(det)?;
            let sidecar = Sidecar::read(emb)?;
            let frames = attach_embeddings(&sidecar, &dets, sidecar.dim)?;
            Ok(Box::new(FileSource::new(frames, sidecar.dim, a.frames)?))
        }
        _ => Err(usage("need --scenario, or --detections together with --embeddings")),
    }
}

fn load_config(r: &RuntimeArgs, embedding_dim: usize) -> CmdResult<PipelineConfig> {
    let mut cfg = match &r.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(w) = r.warmup {
        cfg.warmup_frames = w;
    }
    if r.busy_wait {
        cfg.busy_wait = true;
    }
    cfg.tracker.embedding_dim = embedding_dim;
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n >= 1)
            .ok_or_else(|| usage(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
        cfg.max_contexts = Some(n);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_once(
    source: &dyn DetectionSource,
    mode: PipelineMode,
    cfg: &PipelineConfig,
) -> CmdResult<(Vec<TrackerOutput>, RunReport)> {
    let mut tracker = Tracker::new(cfg.tracker.clone())?;
    Ok(pipeline::run(source, &mut tracker, mode, cfg)?)
}

pub fn track(a: TrackArgs) -> CmdResult {
    let mode = PipelineMode::new(a.mode.into(), a.precision.into(), a.batch_size)?;
    let source = load_source(&a.source)?;
    let cfg = load_config(&a.runtime, source.embedding_dim())?;
    let (outputs, report) = run_once(source.as_ref(), mode, &cfg)?;
    with_output(a.out.as_deref(), |w| write_mot_results(w, &outputs))?;
    let csv = format!("{}\n{}\n", RunReport::csv_header(), report.to_csv_row());
    match &a.report {
        Some(p) => std::fs::write(p, csv).map_err(|e| io_failure(p, e))?,
        None => eprint!("{csv}"),
    }
    Ok(())
}

/// `1,2,4`, `1-10` or a mix of both.
pub fn parse_batch_sizes(s: &str) -> CmdResult<Vec<usize>> {
    let bad = || usage(format!("invalid batch size list '{s}'"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((lo, hi)) => {
                let lo: usize = lo.trim().parse().map_err(|_| bad())?;
                let hi: usize = hi.trim().parse().map_err(|_| bad())?;
                if lo > hi {
                    return Err(bad());
                }
                out.extend(lo..=hi);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err(usage("batch size list is empty"));
    }
    if out.contains(&0) {
        return Err(usage("batch sizes must be at least 1"));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

pub fn bench(a: BenchArgs) -> CmdResult {
    let sizes = parse_batch_sizes(&a.batch_sizes)?;
    if a.modes.is_empty() || a.precisions.is_empty() {
        return Err(usage("need at least one mode and one precision"));
    }
    let source = load_source(&a.source)?;
    let cfg = load_config(&a.runtime, source.embedding_dim())?;

    let mut reports = Vec::new();
    for &p in &a.precisions {
        let precision: Precision = p.into();
        let mut reference: Option<(PipelineMode, Vec<TrackerOutput>)> = None;
        for &m in &a.modes {
            let kind: ModeKind = m.into();
            let batch_list: &[usize] = if kind == ModeKind::Serial { &[1] } else { &sizes };
            for &b in batch_list {
                let mode = PipelineMode::new(kind, precision, b)?;
                eprintln!("running {mode}");
                let (outputs, report) = run_once(source.as_ref(), mode, &cfg)?;
                match &reference {
                    None => reference = Some((mode, outputs)),
                    Some((ref_mode, ref_out)) if *ref_out != outputs => {
                        return Err(Failure::Internal(format!(
                            "determinism violation: {mode} output differs from {ref_mode}"
                        )));
                    }
                    Some(_) => {}
                }
                reports.push(report);
            }
        }
    }

    with_output(a.out.as_deref(), |w| {
        writeln!(w, "{}", RunReport::csv_header())?;
        for r in &reports {
            writeln!(w, "{}", r.to_csv_row())?;
        }
        Ok(())
    })?;
    if let Some(md) = &a.markdown {
        std::fs::write(md, bench_markdown(&reports, &sizes)).map_err(|e| io_failure(md, e))?;
    }
    Ok(())
}

/// FPS per batch size across the four optimization variants, followed by
/// every run.
pub fn bench_markdown(reports: &[RunReport], sizes: &[usize]) -> String {
    let fps: HashMap<(ModeKind, Precision, usize), f64> = reports
        .iter()
        .map(|r| ((r.mode.kind, r.mode.precision, r.mode.batch_size), r.fps))
        .collect();
    let cell = |k: (ModeKind, Precision, usize)| fps.get(&k).map_or("-".to_string(), |f| format!("{f:.2}"));
    let mut s = String::from("| batch | OP | MP | MP and BW | MP, BW and PP |\n|---|---|---|---|---|\n");
    for &b in sizes {
        s.push_str(&format!(
            "| {b} | {} | {} | {} | {} |\n",
            cell((ModeKind::Serial, Precision::Full, 1)),
            cell((ModeKind::Serial, Precision::Mixed, 1)),
            cell((ModeKind::BatchedSerial, Precision::Mixed, b)),
            cell((ModeKind::Parallel, Precision::Mixed, b)),
        ));
    }
    s.push_str("\n| mode | precision | batch | frames | seconds | FPS | max Q1 | max Q2 |\n");
    s.push_str("|---|---|---|---|---|---|---|---|\n");
    for r in reports {
        s.push_str(&format!(
            "| {} | {} | {} | {} | {:.3} | {:.2} | {} | {} |\n",
            r.mode.kind, r.mode.precision, r.mode.batch_size, r.frames, r.seconds, r.fps, r.max_q1, r.max_q2
        ));
    }
    s
}

pub fn eval(a: EvalArgs) -> CmdResult {
    if !(a.iou_min > 0.0 && a.iou_min <= 1.0) {
        return Err(usage("--iou-min must lie in (0, 1]"));
    }
    let mut gt = load_mot_tracks(&a.gt, true)?;
    let mut hyp = load_mot_tracks(&a.result, false)?;
    if let (Some(g), Some(h)) = (moteval::frame_range(&gt), moteval::frame_range(&hyp)) {
        if g != h {
            let (lo, hi) = (g.0.max(h.0), g.1.min(h.1));
            eprintln!(
                "warning: frame ranges differ (gt {}..={}, result {}..={}); evaluating {}..={}",
                g.0 + 1,
                g.1 + 1,
                h.0 + 1,
                h.1 + 1,
                lo + 1,
                hi + 1
            );
            if lo > hi {
                return Err(usage("ground truth and result share no frames"));
            }
            gt = moteval::restrict_frames(&gt, lo, hi);
            hyp = moteval::restrict_frames(&hyp, lo, hi);
        }
    }
    let m = moteval::evaluate(&gt, &hyp, a.iou_min)?;
    with_output(a.out.as_deref(), |w| {
        if a.markdown {
            write!(w, "{}", m.to_markdown())
        } else {
            writeln!(w, "{}\n{}", MotMetrics::header(), m.to_csv_row())
        }
    })
}

pub fn synth(a: SynthArgs) -> CmdResult {
    let defaults = NoiseConfig::default();
    let params = SynthParams {
        objects: a.objects,
        frames: a.frames,
        width: a.width,
        height: a.height,
        embedding_dim: a.embedding_dim,
        seed: a.seed,
        noise: NoiseConfig {
            p_miss: a.p_miss.unwrap_or(defaults.p_miss),
            lambda_fp: a.lambda_fp.unwrap_or(defaults.lambda_fp),
            sigma_box: a.sigma_box.unwrap_or(defaults.sigma_box),
            sigma_emb: a.sigma_emb.unwrap_or(defaults.sigma_emb),
            ..defaults
        },
        separation_margin: a.margin,
        staggered: a.staggered,
        ..SynthParams::default()
    };
    let sc = ScenarioConfig::synthesize(&params)?;
    sc.save(&a.out)?;
    let mut w = create(&a.gt)?;
    write_mot_ground_truth(&mut w, (0..sc.num_frames).map(|f| (f, sc.ground_truth(f))))
        .and_then(|_| w.flush())
        .map_err(|e| io_failure(&a.gt, e))?;
    eprintln!(
        "wrote {} ({} objects, {} frames) and {}",
        a.out.display(),
        sc.objects.len(),
        sc.num_frames,
        a.gt.display()
    );
    Ok(())
}
