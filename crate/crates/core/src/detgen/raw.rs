use crate::detection::Detection;
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::precision;

/// Columns preceding the embedding in each row: box (4), objectness, class score.
pub const ROW_PREFIX: usize = 6;

/// Per-frame detector output, one row per candidate detection.
///
/// Row layout: `x, y, w, h, objectness, class_score, embedding[0..dim]`.
/// With the default 512-wide embedding a row is 518 values. A frame loaded
/// from a detection file before its embeddings are attached has `dim == 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawModelOutput {
    embedding_dim: usize,
    data: Vec<f64>,
}

impl RawModelOutput {
    pub fn empty(embedding_dim: usize) -> Self {
        RawModelOutput {
            embedding_dim,
            data: Vec::new(),
        }
    }

    /// Wraps a row-major buffer; its length must be a multiple of `row_width`.
    pub fn from_flat(row_width: usize, data: Vec<f64>) -> Result<Self> {
        if row_width < ROW_PREFIX {
            return Err(Error::Layout {
                expected: ROW_PREFIX,
                actual: row_width,
            });
        }
        if data.len() % row_width != 0 {
            return Err(Error::Layout {
                expected: row_width,
                actual: data.len() % row_width,
            });
        }
        Ok(RawModelOutput {
            embedding_dim: row_width - ROW_PREFIX,
            data,
        })
    }

    /// Builds a matrix from explicit rows, all of which must share one width.
    pub fn from_rows(row_width: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * row_width);
        for row in rows {
            if row.len() != row_width {
                return Err(Error::Layout {
                    expected: row_width,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(row_width, data)
    }

    #[inline]
    pub fn embedding_dim(&self) -> usize {
        self.embedding_dim
    }

    #[inline]
    pub fn row_width(&self) -> usize {
        ROW_PREFIX + self.embedding_dim
    }

    #[inline]
    pub fn num_rows(&self) -> usize {
        self.data.len() / self.row_width()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.row_width();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.row_width())
    }

    pub fn push_row(
        &mut self,
        bbox: &BoundingBox,
        objectness: f64,
        class_score: f64,
        embedding: &[f32],
    ) -> Result<()> {
        if embedding.len() != self.embedding_dim {
            return Err(Error::Dimension {
                expected: self.embedding_dim,
                actual: embedding.len(),
            });
        }
        self.data
            .extend_from_slice(&[bbox.x, bbox.y, bbox.w, bbox.h, objectness, class_score]);
        self.data.extend(embedding.iter().map(|&v| f64::from(v)));
        Ok(())
    }

    /// Serializes parsed detections back into the row layout.
    pub fn from_detections(embedding_dim: usize, dets: &[Detection]) -> Result<Self> {
        let mut out = RawModelOutput::empty(embedding_dim);
        for d in dets {
            out.push_row(&d.bbox, d.objectness, d.class_score, d.embedding.as_slice())?;
        }
        Ok(out)
    }

    /// Returns a copy with every row widened to carry `embeddings[i]`.
    pub(crate) fn with_embeddings(&self, embeddings: &[Vec<f32>]) -> Result<Self> {
        let dim = embeddings.first().map_or(0, Vec::len);
        let mut out = RawModelOutput::empty(dim);
        if embeddings.len() != self.num_rows() {
            return Err(Error::Consistency(format!(
                "{} embeddings for {} rows",
                embeddings.len(),
                self.num_rows()
            )));
        }
        for (row, emb) in self.rows().zip(embeddings) {
            if emb.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    actual: emb.len(),
                });
            }
            out.data.extend_from_slice(&row[..ROW_PREFIX]);
            out.data.extend(emb.iter().map(|&v| f64::from(v)));
        }
        Ok(out)
    }

    /// Rounds every embedding value through binary16. Box and score columns
    /// are left at full precision.
    pub fn quantize_embeddings(&mut self) -> Result<()> {
        let w = self.row_width();
        for row in self.data.chunks_exact_mut(w) {
            for v in &mut row[ROW_PREFIX..] {
                *v = f64::from(precision::quantize_scalar(*v as f32)?);
            }
        }
        Ok(())
    }
}
