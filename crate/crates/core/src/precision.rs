//! Reduced-precision emulation: embeddings are rounded through IEEE 754
//! binary16 when the pipeline runs in mixed precision.

use std::fmt;
use std::str::FromStr;

use half::f16;
use serde::{Deserialize, Serialize};

use crate::embedding::Embedding;
use crate::error::{Error, Result};

/// Largest finite binary16 magnitude.
pub const BINARY16_MAX: f32 = 65504.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Full,
    Mixed,
}

impl Precision {
    pub fn as_str(&self) -> &'static str {
        match self {
            Precision::Full => "full",
            Precision::Mixed => "mixed",
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" | "fp32" => Ok(Precision::Full),
            "mixed" | "fp16" => Ok(Precision::Mixed),
            other => Err(Error::Config(format!("unknown precision `{other}`"))),
        }
    }
}

/// Rounds one value to the nearest binary16 (ties to even) and widens it back.
pub fn quantize_scalar(v: f32) -> Result<f32> {
    if !v.is_finite() || v.abs() > BINARY16_MAX {
        return Err(Error::PrecisionOverflow(v));
    }
    Ok(f16::from_f32(v).to_f32())
}

/// Applies [`quantize_scalar`] to every component.
pub fn quantize_binary16(e: &Embedding) -> Result<Embedding> {
    quantize_slice(e.as_slice()).map(Embedding::new)
}

pub(crate) fn quantize_slice(values: &[f32]) -> Result<Vec<f32>> {
    values.iter().map(|&v| quantize_scalar(v)).collect()
}
