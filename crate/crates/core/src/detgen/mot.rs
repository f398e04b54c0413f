//! MOT16-style CSV files.
//!
//! Rows are `frame,id,bb_left,bb_top,bb_width,bb_height,conf,...` with
//! 1-indexed frames on disk. Everything in memory is 0-indexed.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::raw::RawModelOutput;
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::tracker::TrackerOutput;

/// Per-frame `(id, box)` lists, keyed by 0-indexed frame.
pub type TrackTable = BTreeMap<usize, Vec<(u64, BoundingBox)>>;

struct Row {
    frame: usize,
    id: f64,
    bbox: BoundingBox,
    conf: f64,
}

fn parse_rows(path: &Path) -> Result<Vec<(usize, Row)>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let perr = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let fields = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| perr(format!("bad number: {e}")))?;
        if fields.len() < 7 {
            return Err(perr(format!("expected at least 7 fields, found {}", fields.len())));
        }
        let frame = fields[0];
        if frame < 1.0 || frame.fract() != 0.0 {
            return Err(perr(format!("frame must be a positive integer, got {frame}")));
        }
        let bbox = BoundingBox::new(fields[2], fields[3], fields[4], fields[5]).map_err(|e| {
            match e {
                Error::InvalidBox(m) => Error::InvalidBox(format!("{}:{line_no}: {m}", path.display())),
                other => other,
            }
        })?;
        rows.push((
            line_no,
            Row {
                frame: frame as usize - 1,
                id: fields[1],
                bbox,
                conf: fields[6],
            },
        ));
    }
    Ok(rows)
}

/// Reads a detection file into per-frame raw outputs without embeddings.
/// The id column is ignored; the confidence column becomes objectness and
/// the class score is set to 1.
pub fn load_mot_detections(path: &Path) -> Result<BTreeMap<usize, RawModelOutput>> {
    let mut out: BTreeMap<usize, RawModelOutput> = BTreeMap::new();
    for (_, row) in parse_rows(path)? {
        out.entry(row.frame)
            .or_insert_with(|| RawModelOutput::empty(0))
            .push_row(&row.bbox, row.conf, 1.0, &[])?;
    }
    Ok(out)
}

/// Reads a ground-truth or tracker-result file.
///
/// With `honor_ignore_flag`, rows whose 7th column is 0 are skipped (the
/// ground-truth convention for ignored regions).
pub fn load_mot_tracks(path: &Path, honor_ignore_flag: bool) -> Result<TrackTable> {
    let mut table = TrackTable::new();
    for (line_no, row) in parse_rows(path)? {
        if honor_ignore_flag && row.conf == 0.0 {
            continue;
        }
        if row.id < 0.0 || row.id.fract() != 0.0 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: line_no,
                message: format!("track id must be a non-negative integer, got {}", row.id),
            });
        }
        table.entry(row.frame).or_default().push((row.id as u64, row.bbox));
    }
    Ok(table)
}

/// Writes tracker outputs as `frame,id,x,y,w,h,conf,-1,-1,-1`.
pub fn write_mot_results<W: Write>(mut w: W, outputs: &[TrackerOutput]) -> std::io::Result<()> {
    for out in outputs {
        for t in &out.tracks {
            writeln!(
                w,
                "{},{},{},{},{},{},{},-1,-1,-1",
                out.frame_index + 1,
                t.track_id,
                t.bbox.x,
                t.bbox.y,
                t.bbox.w,
                t.bbox.h,
                t.objectness
            )?;
        }
    }
    Ok(())
}

/// Writes ground truth rows as `frame,id,x,y,w,h,1,1,1`.
pub fn write_mot_ground_truth<W, I>(mut w: W, frames: I) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = (usize, Vec<(u32, BoundingBox)>)>,
{
    for (frame, objs) in frames {
        for (id, b) in objs {
            writeln!(w, "{},{},{},{},{},{},1,1,1", frame + 1, id, b.x, b.y, b.w, b.h)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file_with(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn single_detection_row() {
        let f = file_with("1,-1,10,20,30,40,0.9\n");
        let map = load_mot_detections(f.path()).unwrap();
        assert_eq!(map.len(), 1);
        let out = &map[&0];
        assert_eq!(out.embedding_dim(), 0);
        assert_eq!(out.row(0), &[10.0, 20.0, 30.0, 40.0, 0.9, 1.0]);
    }

    #[test]
    fn empty_file_is_empty_map() {
        let f = file_with("");
        assert!(load_mot_detections(f.path()).unwrap().is_empty());
    }

    #[test]
    fn short_row_names_its_line() {
        let f = file_with("1,-1,10,20,30,40,0.9\n2,-1,1,2,3\n");
        match load_mot_detections(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn negative_size_is_invalid_box() {
        let f = file_with("1,-1,10,20,-30,40,0.9\n");
        assert!(matches!(load_mot_detections(f.path()), Err(Error::InvalidBox(_))));
    }

    #[test]
    fn gt_ignore_flag() {
        let f = file_with("1,1,0,0,10,10,1,1,1\n1,2,50,50,10,10,0,1,1\n3,1,5,0,10,10,1,1,1\n");
        let all = load_mot_tracks(f.path(), false).unwrap();
        assert_eq!(all[&0].len(), 2);
        let kept = load_mot_tracks(f.path(), true).unwrap();
        assert_eq!(kept[&0], vec![(1, BoundingBox::new(0.0, 0.0, 10.0, 10.0).unwrap())]);
        assert_eq!(kept[&2].len(), 1);
    }
}
