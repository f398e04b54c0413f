//! Binary embedding sidecar for file-driven runs.
//!
//! Layout (little-endian): magic `EMB1`, `u32` dim, then records of
//! `frame: u32, det_index: u32, dim x f32`. `frame` is 0-indexed and
//! `det_index` is the row's position within its frame in the detection file.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use super::raw::RawModelOutput;
use crate::embedding::normalize;
use crate::error::{Error, Result};

pub const SIDECAR_MAGIC: &[u8; 4] = b"EMB1";

#[derive(Debug, Clone, PartialEq)]
pub struct SidecarRecord {
    pub frame: u32,
    pub det_index: u32,
    pub values: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sidecar {
    pub dim: usize,
    pub records: Vec<SidecarRecord>,
}

impl Sidecar {
    pub fn read_from<R: Read>(mut r: R, origin: &Path) -> Result<Self> {
        let io = |e| Error::io(origin, e);
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes).map_err(io)?;
        let bad = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            line: 0,
            message,
        };
        if bytes.len() < 8 || &bytes[..4] != SIDECAR_MAGIC {
            return Err(bad("missing EMB1 header".into()));
        }
        let dim = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let rec_len = 8 + 4 * dim;
        let body = &bytes[8..];
        if body.len() % rec_len != 0 {
            return Err(bad(format!(
                "body of {} bytes is not a whole number of {rec_len}-byte records",
                body.len()
            )));
        }
        let records = body
            .chunks_exact(rec_len)
            .map(|rec| SidecarRecord {
                frame: u32::from_le_bytes(rec[0..4].try_into().unwrap()),
                det_index: u32::from_le_bytes(rec[4..8].try_into().unwrap()),
                values: rec[8..]
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            })
            .collect();
        Ok(Sidecar { dim, records })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(std::io::BufReader::new(f), path)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(SIDECAR_MAGIC)?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        for rec in &self.records {
            w.write_all(&rec.frame.to_le_bytes())?;
            w.write_all(&rec.det_index.to_le_bytes())?;
            for v in &rec.values {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }
}

/// Attaches sidecar embeddings to detections loaded from a MOT file.
///
/// Every detection needs exactly one record and every record must name an
/// existing detection. Embeddings are normalized on load.
pub fn load_embedding_sidecar(
    path: &Path,
    detections: &BTreeMap<usize, RawModelOutput>,
    expected_dim: usize,
) -> Result<BTreeMap<usize, RawModelOutput>> {
    let sidecar = Sidecar::read(path)?;
    attach_embeddings(&sidecar, detections, expected_dim)
}

pub fn attach_embeddings(
    sidecar: &Sidecar,
    detections: &BTreeMap<usize, RawModelOutput>,
    expected_dim: usize,
) -> Result<BTreeMap<usize, RawModelOutput>> {
    if sidecar.dim != expected_dim {
        return Err(Error::Dimension {
            expected: expected_dim,
            actual: sidecar.dim,
        });
    }
    let mut by_key: BTreeMap<(usize, usize), &SidecarRecord> = BTreeMap::new();
    for rec in &sidecar.records {
        let key = (rec.frame as usize, rec.det_index as usize);
        let known = detections
            .get(&key.0)
            .map_or(false, |out| key.1 < out.num_rows());
        if !known {
            return Err(Error::Consistency(format!(
                "sidecar record (frame {}, det {}) has no matching detection",
                key.0, key.1
            )));
        }
        if by_key.insert(key, rec).is_some() {
            return Err(Error::Consistency(format!(
                "duplicate sidecar record (frame {}, det {})",
                key.0, key.1
            )));
        }
    }

    let mut out = BTreeMap::new();
    for (&frame, raw) in detections {
        let mut embeddings = Vec::with_capacity(raw.num_rows());
        for det in 0..raw.num_rows() {
            let rec = by_key.get(&(frame, det)).ok_or_else(|| {
                Error::Consistency(format!(
                    "no sidecar embedding for (frame {frame}, det {det})"
                ))
            })?;
            embeddings.push(normalize(&rec.values)?.into_vec());
        }
        let widened = if embeddings.is_empty() {
            RawModelOutput::empty(expected_dim)
        } else {
            raw.with_embeddings(&embeddings)?
        };
        out.insert(frame, widened);
    }
    Ok(out)
}
