//! CLEAR-MOT and identity metrics.
//!
//! Per-frame matching keeps last frame's gt/hypothesis pairs while their
//! IoU stays above the threshold, then solves the rest optimally on
//! `1 - IoU`. Identity metrics match whole trajectories.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::assoc::{hungarian_solve, CostMatrix};
use crate::detgen::{ScenarioConfig, TrackTable};
use crate::error::{Error, Result};
use crate::geometry::{iou, BoundingBox};
use crate::tracker::TrackerOutput;

pub const DEFAULT_IOU_MIN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub gt_id: u64,
    pub hyp_id: u64,
    pub iou: f64,
    /// The gt object was last matched to a different hypothesis.
    pub switched: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FrameCorrespondence {
    pub matches: Vec<MatchedPair>,
    pub unmatched_gt: Vec<u64>,
    pub unmatched_hyp: Vec<u64>,
}

impl FrameCorrespondence {
    pub fn switches(&self) -> usize {
        self.matches.iter().filter(|m| m.switched).count()
    }
}

/// Last hypothesis matched to each gt object, carried across frames.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchState {
    last: HashMap<u64, u64>,
}

impl MatchState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn last_hypothesis(&self, gt_id: u64) -> Option<u64> {
        self.last.get(&gt_id).copied()
    }

    pub fn advance(&mut self, frame: &FrameCorrespondence) {
        for m in &frame.matches {
            self.last.insert(m.gt_id, m.hyp_id);
        }
    }
}

fn check_unique(objs: &[(u64, BoundingBox)], what: &str) -> Result<()> {
    let mut seen = BTreeSet::new();
    for (id, b) in objs {
        b.validate()?;
        if !seen.insert(*id) {
            return Err(Error::Input(format!("duplicate {what} id {id} in one frame")));
        }
    }
    Ok(())
}

pub fn match_frame(
    gt: &[(u64, BoundingBox)],
    hyp: &[(u64, BoundingBox)],
    prev: &MatchState,
    iou_min: f64,
) -> Result<FrameCorrespondence> {
    check_unique(gt, "gt")?;
    check_unique(hyp, "hypothesis")?;
    let hyp_pos: HashMap<u64, usize> = hyp.iter().enumerate().map(|(i, (id, _))| (*id, i)).collect();
    let mut gt_done = vec![false; gt.len()];
    let mut hyp_done = vec![false; hyp.len()];
    let mut matches = Vec::new();

    for (gi, (gid, gb)) in gt.iter().enumerate() {
        let Some(&hi) = prev.last_hypothesis(*gid).and_then(|h| hyp_pos.get(&h)) else {
            continue;
        };
        if hyp_done[hi] {
            continue;
        }
        let o = iou(gb, &hyp[hi].1)?;
        if o >= iou_min {
            gt_done[gi] = true;
            hyp_done[hi] = true;
            matches.push(MatchedPair {
                gt_id: *gid,
                hyp_id: hyp[hi].0,
                iou: o,
                switched: false,
            });
        }
    }

    let rest_gt: Vec<usize> = (0..gt.len()).filter(|&i| !gt_done[i]).collect();
    let rest_hyp: Vec<usize> = (0..hyp.len()).filter(|&i| !hyp_done[i]).collect();
    let mut ious = Vec::with_capacity(rest_gt.len() * rest_hyp.len());
    let mut cost = CostMatrix::filled(rest_gt.len(), rest_hyp.len(), f64::INFINITY);
    for (r, &gi) in rest_gt.iter().enumerate() {
        for (c, &hi) in rest_hyp.iter().enumerate() {
            let o = iou(&gt[gi].1, &hyp[hi].1)?;
            ious.push(o);
            if o >= iou_min {
                cost.set(r, c, 1.0 - o);
            }
        }
    }
    for m in hungarian_solve(&cost).matches {
        let (gi, hi) = (rest_gt[m.track], rest_hyp[m.detection]);
        gt_done[gi] = true;
        hyp_done[hi] = true;
        let (gid, hid) = (gt[gi].0, hyp[hi].0);
        matches.push(MatchedPair {
            gt_id: gid,
            hyp_id: hid,
            iou: ious[m.track * rest_hyp.len() + m.detection],
            switched: prev.last_hypothesis(gid).is_some_and(|h| h != hid),
        });
    }
    matches.sort_by_key(|m| m.gt_id);

    Ok(FrameCorrespondence {
        matches,
        unmatched_gt: gt.iter().zip(&gt_done).filter(|(_, d)| !**d).map(|(o, _)| o.0).collect(),
        unmatched_hyp: hyp.iter().zip(&hyp_done).filter(|(_, d)| !**d).map(|(o, _)| o.0).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClearMot {
    pub mota: f64,
    /// Mean `1 - IoU` over matches; NaN without matches.
    pub motp: f64,
    pub fp: usize,
    pub fn_: usize,
    pub id_switches: usize,
    pub fragmentations: usize,
    pub recall: f64,
    /// NaN without any hypothesis.
    pub precision: f64,
    pub mostly_tracked: usize,
    pub partially_tracked: usize,
    pub mostly_lost: usize,
    pub true_positives: usize,
    pub total_gt: usize,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        f64::NAN
    } else {
        num / den
    }
}

/// Aggregates per-frame correspondences, given in frame order.
pub fn clear_mot(frames: &[FrameCorrespondence]) -> Result<ClearMot> {
    let (mut tp, mut fp, mut fn_, mut ids) = (0usize, 0usize, 0usize, 0usize);
    let mut dist = 0.0;
    // per gt id: frames present, frames matched, fragmentations, last presence state
    #[derive(Default)]
    struct Life {
        present: usize,
        matched: usize,
        frag: usize,
        ever_matched: bool,
        gap: bool,
    }
    let mut lives: BTreeMap<u64, Life> = BTreeMap::new();
    for f in frames {
        tp += f.matches.len();
        fp += f.unmatched_hyp.len();
        fn_ += f.unmatched_gt.len();
        ids += f.switches();
        for m in &f.matches {
            dist += 1.0 - m.iou;
            let l = lives.entry(m.gt_id).or_default();
            l.present += 1;
            l.matched += 1;
            if l.gap {
                l.frag += 1;
                l.gap = false;
            }
            l.ever_matched = true;
        }
        for g in &f.unmatched_gt {
            let l = lives.entry(*g).or_default();
            l.present += 1;
            if l.ever_matched {
                l.gap = true;
            }
        }
    }
    let total_gt = tp + fn_;
    if total_gt == 0 {
        return Err(Error::UndefinedMetric("no ground-truth objects".into()));
    }
    let (mut mt, mut pt, mut ml) = (0, 0, 0);
    for l in lives.values() {
        let r = l.matched as f64 / l.present as f64;
        if r >= 0.8 {
            mt += 1;
        } else if r <= 0.2 {
            ml += 1;
        } else {
            pt += 1;
        }
    }
    Ok(ClearMot {
        mota: 1.0 - (fp + fn_ + ids) as f64 / total_gt as f64,
        motp: ratio(dist, tp as f64),
        fp,
        fn_,
        id_switches: ids,
        fragmentations: lives.values().map(|l| l.frag).sum(),
        recall: tp as f64 / total_gt as f64,
        precision: ratio(tp as f64, (tp + fp) as f64),
        mostly_tracked: mt,
        partially_tracked: pt,
        mostly_lost: ml,
        true_positives: tp,
        total_gt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdMetrics {
    pub idf1: f64,
    /// NaN without any hypothesis.
    pub idp: f64,
    pub idr: f64,
    pub idtp: usize,
    pub total_gt: usize,
    pub total_hyp: usize,
}

/// Frames jointly covered with IoU ≥ `iou_min`, for every gt/hyp id pair
/// that overlaps at least once. Also returns per-side detection counts.
pub fn trajectory_overlaps(
    gt: &TrackTable,
    hyp: &TrackTable,
    iou_min: f64,
) -> Result<(BTreeMap<(u64, u64), usize>, usize, usize)> {
    let mut overlap = BTreeMap::new();
    let total_gt = gt.values().map(Vec::len).sum();
    let total_hyp = hyp.values().map(Vec::len).sum();
    for (frame, g_objs) in gt {
        check_unique(g_objs, "gt")?;
        let Some(h_objs) = hyp.get(frame) else { continue };
        check_unique(h_objs, "hypothesis")?;
        for (gid, gb) in g_objs {
            for (hid, hb) in h_objs {
                if iou(gb, hb)? >= iou_min {
                    *overlap.entry((*gid, *hid)).or_insert(0) += 1;
                }
            }
        }
    }
    Ok((overlap, total_gt, total_hyp))
}

/// IDF1, IDP and IDR from the one-to-one trajectory matching that
/// maximizes jointly covered frames.
pub fn id_metrics(gt: &TrackTable, hyp: &TrackTable, iou_min: f64) -> Result<IdMetrics> {
    let (overlap, total_gt, total_hyp) = trajectory_overlaps(gt, hyp, iou_min)?;
    if total_gt == 0 {
        return Err(Error::UndefinedMetric("no ground-truth objects".into()));
    }
    let g_ids: Vec<u64> = overlap.keys().map(|k| k.0).collect::<BTreeSet<_>>().into_iter().collect();
    let h_ids: Vec<u64> = overlap.keys().map(|k| k.1).collect::<BTreeSet<_>>().into_iter().collect();
    let mut cost = CostMatrix::filled(g_ids.len(), h_ids.len(), 0.0);
    for (r, g) in g_ids.iter().enumerate() {
        for (c, h) in h_ids.iter().enumerate() {
            if let Some(n) = overlap.get(&(*g, *h)) {
                cost.set(r, c, -(*n as f64));
            }
        }
    }
    let idtp: usize = hungarian_solve(&cost)
        .matches
        .iter()
        .map(|m| overlap.get(&(g_ids[m.track], h_ids[m.detection])).copied().unwrap_or(0))
        .sum();
    Ok(IdMetrics {
        idf1: 2.0 * idtp as f64 / (total_gt + total_hyp) as f64,
        idp: ratio(idtp as f64, total_hyp as f64),
        idr: idtp as f64 / total_gt as f64,
        idtp,
        total_gt,
        total_hyp,
    })
}

/// Full metric set, one row of the comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotMetrics {
    pub idf1: f64,
    pub idp: f64,
    pub idr: f64,
    pub recall: f64,
    pub precision: f64,
    pub mostly_tracked: usize,
    pub partially_tracked: usize,
    pub mostly_lost: usize,
    pub fp: usize,
    pub fn_: usize,
    pub id_switches: usize,
    pub fragmentations: usize,
    pub mota: f64,
    pub motp: f64,
}

pub const METRICS_HEADER: &str = "IDF1,IDP,IDR,Rcll,Prcn,MT,PT,ML,FP,FN,IDs,FM,MOTA,MOTP";

impl MotMetrics {
    pub fn new(c: &ClearMot, i: &IdMetrics) -> Self {
        MotMetrics {
            idf1: i.idf1,
            idp: i.idp,
            idr: i.idr,
            recall: c.recall,
            precision: c.precision,
            mostly_tracked: c.mostly_tracked,
            partially_tracked: c.partially_tracked,
            mostly_lost: c.mostly_lost,
            fp: c.fp,
            fn_: c.fn_,
            id_switches: c.id_switches,
            fragmentations: c.fragmentations,
            mota: c.mota,
            motp: c.motp,
        }
    }

    pub fn header() -> &'static str {
        METRICS_HEADER
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.idf1,
            self.idp,
            self.idr,
            self.recall,
            self.precision,
            self.mostly_tracked,
            self.partially_tracked,
            self.mostly_lost,
            self.fp,
            self.fn_,
            self.id_switches,
            self.fragmentations,
            self.mota,
            self.motp
        )
    }

    /// Same columns with ratios as percentages, for reading.
    pub fn to_markdown(&self) -> String {
        let pct = |v: f64| format!("{:.1}", v * 100.0);
        let cells = [
            pct(self.idf1),
            pct(self.idp),
            pct(self.idr),
            pct(self.recall),
            pct(self.precision),
            self.mostly_tracked.to_string(),
            self.partially_tracked.to_string(),
            self.mostly_lost.to_string(),
            self.fp.to_string(),
            self.fn_.to_string(),
            self.id_switches.to_string(),
            self.fragmentations.to_string(),
            pct(self.mota),
            format!("{:.3}", self.motp),
        ];
        let head = METRICS_HEADER.replace(',', " | ");
        let rule = vec!["---"; cells.len()].join(" | ");
        format!("| {head} |\n| {rule} |\n| {} |\n", cells.join(" | "))
    }
}

impl fmt::Display for MotMetrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_csv_row())
    }
}

impl FromStr for MotMetrics {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 14 {
            return Err(Error::Input(format!("expected 14 metric fields, got {}", f.len())));
        }
        let fl = |i: usize| f[i].parse::<f64>().map_err(|_| Error::Input(format!("bad number '{}'", f[i])));
        let int = |i: usize| f[i].parse::<usize>().map_err(|_| Error::Input(format!("bad count '{}'", f[i])));
        Ok(MotMetrics {
            idf1: fl(0)?,
            idp: fl(1)?,
            idr: fl(2)?,
            recall: fl(3)?,
            precision: fl(4)?,
            mostly_tracked: int(5)?,
            partially_tracked: int(6)?,
            mostly_lost: int(7)?,
            fp: int(8)?,
            fn_: int(9)?,
            id_switches: int(10)?,
            fragmentations: int(11)?,
            mota: fl(12)?,
            motp: fl(13)?,
        })
    }
}

/// Frame-by-frame correspondences over every frame present in either table.
pub fn correspondences(gt: &TrackTable, hyp: &TrackTable, iou_min: f64) -> Result<Vec<FrameCorrespondence>> {
    let frames: BTreeSet<usize> = gt.keys().chain(hyp.keys()).copied().collect();
    let mut state = MatchState::new();
    let empty = Vec::new();
    frames
        .into_iter()
        .map(|f| {
            let c = match_frame(
                gt.get(&f).unwrap_or(&empty),
                hyp.get(&f).unwrap_or(&empty),
                &state,
                iou_min,
            )?;
            state.advance(&c);
            Ok(c)
        })
        .collect()
}

pub fn evaluate(gt: &TrackTable, hyp: &TrackTable, iou_min: f64) -> Result<MotMetrics> {
    let c = clear_mot(&correspondences(gt, hyp, iou_min)?)?;
    let i = id_metrics(gt, hyp, iou_min)?;
    Ok(MotMetrics::new(&c, &i))
}

/// Inclusive frame range covered by a table.
pub fn frame_range(table: &TrackTable) -> Option<(usize, usize)> {
    Some((*table.keys().next()?, *table.keys().next_back()?))
}

/// Keeps only frames in `lo..=hi`.
pub fn restrict_frames(table: &TrackTable, lo: usize, hi: usize) -> TrackTable {
    table.range(lo..=hi).map(|(k, v)| (*k, v.clone())).collect()
}

pub fn table_from_outputs(outputs: &[TrackerOutput]) -> TrackTable {
    outputs
        .iter()
        .map(|o| (o.frame_index, o.tracks.iter().map(|t| (t.track_id, t.bbox)).collect()))
        .collect()
}

/// Ground truth of the first `frames` frames of a scenario. Frames without
/// objects are kept as empty entries.
pub fn table_from_scenario(scenario: &ScenarioConfig, frames: usize) -> TrackTable {
    (0..frames)
        .map(|f| {
            let objs = scenario.ground_truth(f).into_iter().map(|(id, b)| (id as u64, b)).collect();
            (f, objs)
        })
        .collect()
}
