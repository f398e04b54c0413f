use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::PipelineMode;
use crate::error::{Error, Result};

/// Capture and emission instants of one frame, relative to run start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameTiming {
    pub frame_index: usize,
    pub captured: Duration,
    pub emitted: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FpsMeasurement {
    /// Frames inside the measured window.
    pub frames: usize,
    /// Warm-up frames actually excluded.
    pub warmup: usize,
    pub seconds: f64,
    pub fps: f64,
}

/// Frames per second from the capture of the first post-warm-up frame to
/// the last tracker output.
///
/// When the run is not longer than the warm-up, nothing is excluded so that
/// short runs still yield a figure.
pub fn measure_fps(timings: &[FrameTiming], warmup: usize) -> Result<FpsMeasurement> {
    if timings.is_empty() {
        return Err(Error::Measurement("no frames processed".into()));
    }
    let mut sorted: Vec<FrameTiming> = timings.to_vec();
    sorted.sort_by_key(|t| t.frame_index);
    let warmup = if sorted.len() > warmup { warmup } else { 0 };
    let window = &sorted[warmup..];
    let start = window[0].captured;
    let end = window.iter().map(|t| t.emitted).max().unwrap_or(start);
    let seconds = end.saturating_sub(start).as_secs_f64();
    if seconds <= 0.0 {
        return Err(Error::Measurement("measured window has zero duration".into()));
    }
    Ok(FpsMeasurement {
        frames: window.len(),
        warmup,
        seconds,
        fps: window.len() as f64 / seconds,
    })
}

/// Summary of one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: PipelineMode,
    /// Frames in the measured window.
    pub frames: usize,
    pub total_frames: usize,
    pub warmup_frames: usize,
    pub seconds: f64,
    pub fps: f64,
    pub capture_busy_s: f64,
    pub inference_busy_s: f64,
    pub post_busy_s: f64,
    pub max_q1: usize,
    pub max_q2: usize,
}

pub const CSV_HEADER: &str = "mode,precision,batch_size,frames,seconds,fps,max_q1,max_q2";

impl RunReport {
    pub fn csv_header() -> &'static str {
        CSV_HEADER
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.mode.kind,
            self.mode.precision,
            self.mode.batch_size,
            self.frames,
            self.seconds,
            self.fps,
            self.max_q1,
            self.max_q2
        )
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_csv_row())
    }
}

/// One parsed CSV row. Busy times and totals are not part of the row.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub mode: PipelineMode,
    pub frames: usize,
    pub seconds: f64,
    pub fps: f64,
    pub max_q1: usize,
    pub max_q2: usize,
}

impl From<&RunReport> for ReportRow {
    fn from(r: &RunReport) -> Self {
        ReportRow {
            mode: r.mode,
            frames: r.frames,
            seconds: r.seconds,
            fps: r.fps,
            max_q1: r.max_q1,
            max_q2: r.max_q2,
        }
    }
}

impl FromStr for ReportRow {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 8 {
            return Err(Error::Input(format!("expected 8 report fields, got {}", f.len())));
        }
        let bad = |what: &str| Error::Input(format!("bad {what} in report row: {line}"));
        let kind = f[0].parse().map_err(|_| bad("mode"))?;
        let precision = f[1].parse().map_err(|_| bad("precision"))?;
        let batch_size = f[2].parse().map_err(|_| bad("batch_size"))?;
        Ok(ReportRow {
            mode: PipelineMode::new(kind, precision, batch_size)?,
            frames: f[3].parse().map_err(|_| bad("frames"))?,
            seconds: f[4].parse().map_err(|_| bad("seconds"))?,
            fps: f[5].parse().map_err(|_| bad("fps"))?,
            max_q1: f[6].parse().map_err(|_| bad("max_q1"))?,
            max_q2: f[7].parse().map_err(|_| bad("max_q2"))?,
        })
    }
}
