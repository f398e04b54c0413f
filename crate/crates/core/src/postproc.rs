//! First post-processing steps: decode raw rows, drop low-objectness rows,
//! greedy non-max suppression.

use crate::detection::Detection;
use crate::detgen::raw::{RawModelOutput, ROW_PREFIX};
use crate::embedding::normalize;
use crate::error::{Error, Result};
use crate::geometry::{iou_unchecked, BoundingBox};

/// Decodes every row into a [`Detection`] with a unit embedding.
pub fn parse_output(raw: &RawModelOutput, embedding_dim: usize) -> Result<Vec<Detection>> {
    let expected = ROW_PREFIX + embedding_dim;
    if raw.row_width() != expected {
        return Err(Error::Layout {
            expected,
            actual: raw.row_width(),
        });
    }
    let mut buf = vec![0f32; embedding_dim];
    raw.rows()
        .map(|row| {
            let bbox = BoundingBox::new(row[0], row[1], row[2], row[3])?;
            for (dst, &v) in buf.iter_mut().zip(&row[ROW_PREFIX..]) {
                *dst = v as f32;
            }
            Ok(Detection {
                bbox,
                objectness: row[4],
                class_score: row[5],
                embedding: normalize(&buf)?,
            })
        })
        .collect()
}

/// Keeps detections with `objectness >= threshold`, in order.
pub fn filter_confidence(dets: Vec<Detection>, threshold: f64) -> Vec<Detection> {
    dets.into_iter().filter(|d| d.objectness >= threshold).collect()
}

/// Indices surviving greedy NMS, in descending objectness order.
/// Ties keep the lower original index first.
pub fn nms_indices(boxes: &[BoundingBox], scores: &[f64], iou_threshold: f64) -> Vec<usize> {
    debug_assert_eq!(boxes.len(), scores.len());
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    // stable sort: equal scores stay in index order
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut suppressed = vec![false; boxes.len()];
    let mut keep = Vec::new();
    for (pos, &i) in order.iter().enumerate() {
        if suppressed[i] {
            continue;
        }
        keep.push(i);
        for &j in &order[pos + 1..] {
            if !suppressed[j] && iou_unchecked(&boxes[i], &boxes[j]) > iou_threshold {
                suppressed[j] = true;
            }
        }
    }
    keep
}

pub fn nms(dets: Vec<Detection>, iou_threshold: f64) -> Vec<Detection> {
    let boxes: Vec<BoundingBox> = dets.iter().map(|d| d.bbox).collect();
    let scores: Vec<f64> = dets.iter().map(|d| d.objectness).collect();
    let keep = nms_indices(&boxes, &scores, iou_threshold);
    let mut slots: Vec<Option<Detection>> = dets.into_iter().map(Some).collect();
    keep.into_iter()
        .map(|i| slots[i].take().expect("each index kept once"))
        .collect()
}
