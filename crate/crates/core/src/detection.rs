use serde::{Deserialize, Serialize};

use crate::embedding::Embedding;
use crate::geometry::BoundingBox;

/// One parsed detector output row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: BoundingBox,
    pub objectness: f64,
    /// Carried through but not used for single-class tracking.
    pub class_score: f64,
    /// Unit-norm appearance embedding.
    pub embedding: Embedding,
}
