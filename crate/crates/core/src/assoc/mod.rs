//! Track/detection association: appearance cost matrix, motion gating,
//! optimal assignment and cost-threshold rejection.

mod hungarian;

use serde::{Deserialize, Serialize};

use crate::embedding::{cosine_distance, Embedding};
use crate::error::{Error, Result};

/// Dense row-major matrix. As a cost matrix, rows are tracks and columns
/// detections; `+inf` marks a forbidden pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(CostMatrix { rows, cols, data })
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        CostMatrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::Dimension {
                    expected: cols,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(CostMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub track: usize,
    pub detection: usize,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Assignment {
    pub matches: Vec<Match>,
    pub unmatched_tracks: Vec<usize>,
    pub unmatched_detections: Vec<usize>,
}

impl Assignment {
    pub fn total_cost(&self) -> f64 {
        self.matches.iter().map(|m| m.cost).sum()
    }

    /// Checks that every track in `0..tracks` and every detection in
    /// `0..detections` appears exactly once.
    pub fn is_partition(&self, tracks: usize, detections: usize) -> bool {
        let mut seen_t = vec![0u8; tracks];
        let mut seen_d = vec![0u8; detections];
        let bump = |v: &mut Vec<u8>, i: usize| match v.get_mut(i) {
            Some(c) => {
                *c += 1;
                true
            }
            None => false,
        };
        for m in &self.matches {
            if !bump(&mut seen_t, m.track) || !bump(&mut seen_d, m.detection) {
                return false;
            }
        }
        for &t in &self.unmatched_tracks {
            if !bump(&mut seen_t, t) {
                return false;
            }
        }
        for &d in &self.unmatched_detections {
            if !bump(&mut seen_d, d) {
                return false;
            }
        }
        seen_t.iter().chain(&seen_d).all(|&c| c == 1)
    }
}

/// Cosine distance between every track embedding and every detection embedding.
pub fn build_cost_matrix<T, D>(tracks: &[T], dets: &[D]) -> Result<CostMatrix>
where
    T: AsRef<Embedding>,
    D: AsRef<Embedding>,
{
    let mut data = Vec::with_capacity(tracks.len() * dets.len());
    for t in tracks {
        for d in dets {
            data.push(cosine_distance(t.as_ref(), d.as_ref())?);
        }
    }
    CostMatrix::new(tracks.len(), dets.len(), data)
}

/// Sets every cell whose gate distance exceeds `threshold` to `+inf`.
pub fn apply_gate(cost: &CostMatrix, gate: &CostMatrix, threshold: f64) -> Result<CostMatrix> {
    if cost.rows != gate.rows || cost.cols != gate.cols {
        return Err(Error::Dimension {
            expected: cost.rows * cost.cols,
            actual: gate.rows * gate.cols,
        });
    }
    let data = cost
        .data
        .iter()
        .zip(&gate.data)
        .map(|(&c, &g)| if g > threshold { f64::INFINITY } else { c })
        .collect();
    Ok(CostMatrix { data, ..*cost })
}

/// Optimal assignment. Pairs that could only be made through `+inf` cells
/// are left unmatched.
pub fn hungarian_solve(cost: &CostMatrix) -> Assignment {
    let pairs = hungarian::solve_rectangular(&cost.data, cost.rows, cost.cols);
    let mut track_used = vec![false; cost.rows];
    let mut det_used = vec![false; cost.cols];
    let matches = pairs
        .into_iter()
        .map(|(t, d)| {
            track_used[t] = true;
            det_used[d] = true;
            Match {
                track: t,
                detection: d,
                cost: cost.get(t, d),
            }
        })
        .collect();
    Assignment {
        matches,
        unmatched_tracks: (0..cost.rows).filter(|&t| !track_used[t]).collect(),
        unmatched_detections: (0..cost.cols).filter(|&d| !det_used[d]).collect(),
    }
}

/// Dissolves matches costing more than `max_cost`.
pub fn match_with_threshold(assignment: Assignment, max_cost: f64) -> Assignment {
    let Assignment {
        matches,
        mut unmatched_tracks,
        mut unmatched_detections,
    } = assignment;
    let (kept, rejected): (Vec<Match>, Vec<Match>) =
        matches.into_iter().partition(|m| m.cost <= max_cost);
    for m in rejected {
        unmatched_tracks.push(m.track);
        unmatched_detections.push(m.detection);
    }
    unmatched_tracks.sort_unstable();
    unmatched_detections.sort_unstable();
    Assignment {
        matches: kept,
        unmatched_tracks,
        unmatched_detections,
    }
}

impl AsRef<Embedding> for Embedding {
    fn as_ref(&self) -> &Embedding {
        self
    }
}
