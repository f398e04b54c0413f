use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Width of the appearance embedding emitted per detection.
pub const EMBEDDING_DIM: usize = 512;

/// Appearance embedding. Values are stored as `f32`; reductions run in `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding(Vec<f32>);

impl Embedding {
    pub fn new(values: Vec<f32>) -> Self {
        Embedding(values)
    }

    pub fn zeros(dim: usize) -> Self {
        Embedding(vec![0.0; dim])
    }

    /// Unit vector along axis `i`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Embedding(v)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0
            .iter()
            .map(|&v| f64::from(v) * f64::from(v))
            .sum::<f64>()
            .sqrt()
    }

    pub fn dot(&self, other: &Embedding) -> Result<f64> {
        check_dims(self.dim(), other.dim())?;
        Ok(dot_unchecked(&self.0, &other.0))
    }

    /// Rescales to unit Euclidean norm.
    pub fn normalize(&self) -> Result<Embedding> {
        normalize(&self.0)
    }

    pub fn negated(&self) -> Embedding {
        Embedding(self.0.iter().map(|v| -v).collect())
    }
}

impl From<Vec<f32>> for Embedding {
    fn from(v: Vec<f32>) -> Self {
        Embedding(v)
    }
}

#[inline]
fn check_dims(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::Dimension { expected, actual });
    }
    Ok(())
}

#[inline]
pub(crate) fn dot_unchecked(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| f64::from(x) * f64::from(y))
        .sum()
}

/// Normalizes a raw slice of values into a unit [`Embedding`].
pub fn normalize(values: &[f32]) -> Result<Embedding> {
    let norm = values
        .iter()
        .map(|&v| f64::from(v) * f64::from(v))
        .sum::<f64>()
        .sqrt();
    if !norm.is_finite() {
        return Err(Error::DegenerateEmbedding(format!("non-finite norm {norm}")));
    }
    if norm <= f64::from(f32::MIN_POSITIVE) {
        return Err(Error::DegenerateEmbedding("zero-norm vector".into()));
    }
    Ok(Embedding(
        values.iter().map(|&v| (f64::from(v) / norm) as f32).collect(),
    ))
}

/// `1 - <a, b>` for unit embeddings, clamped to `[0, 2]`.
pub fn cosine_distance(a: &Embedding, b: &Embedding) -> Result<f64> {
    let d = a.dot(b)?;
    Ok((1.0 - d).clamp(0.0, 2.0))
}
