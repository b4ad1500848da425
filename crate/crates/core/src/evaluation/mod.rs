//! Quality control against reference annotations.
//!
//! Candidate boxes are matched to reference boxes per frame by greedy
//! descending 3D IoU. Matching is purely geometric unless
//! [`EvalOptions::track_consistent`] is set.
//!
//! Ratios whose denominator is zero (no predictions, no references, or
//! `p + r = 0`) are reported as 0.

mod matching;
mod series;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{import_ground_truth, AnnotationFile, DatasetError, GtSchema};
use crate::geometry::{Box3D, ClassLabel};

pub use matching::{match_frame, match_frame_with, MatchPair, MatchResult};
pub use series::{export_metric_series, read_metric_series, SERIES_HEADER};

/// IoU above which a matched pair counts toward `frac_iou_above_0_6`.
pub const HIGH_IOU: f64 = 0.6;
pub const DEFAULT_IOU_THRESHOLD: f64 = 0.6;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("sequence mismatch: prediction is `{pred}`, reference is `{gt}`")]
    SequenceMismatch { pred: String, gt: String },
    #[error("iou threshold {0} outside (0, 1)")]
    InvalidThreshold(f64),
    #[error("writing metric series: {0}")]
    Io(#[from] std::io::Error),
    #[error("metric series: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// `TP / (TP + FP)`, or 0 when there are no predictions.
pub fn precision(tp: u64, fp: u64) -> f64 {
    ratio(tp, tp + fp)
}

/// `TP / (TP + FN)`, or 0 when there are no references.
pub fn recall(tp: u64, fn_: u64) -> f64 {
    ratio(tp, tp + fn_)
}

/// Harmonic mean of precision and recall, or 0 when both are 0.
pub fn f1(p: f64, r: f64) -> f64 {
    if p + r <= 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub iou_threshold: f64,
    /// Require each reference track to pair with a single candidate track
    /// (and vice versa) over the whole sequence.
    pub track_consistent: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            iou_threshold: DEFAULT_IOU_THRESHOLD,
            track_consistent: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMetrics {
    pub frame: u32,
    pub mean_iou: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    /// Mean IoU over all matched pairs of all frames.
    pub mean_iou: f64,
    /// Share of reference boxes whose best geometric match has IoU > 0.6.
    pub frac_iou_above_0_6: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    /// Candidate boxes per class.
    pub per_class_counts: BTreeMap<ClassLabel, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub sequence_id: String,
    pub iou_threshold: f64,
    pub track_consistent: bool,
    pub per_frame: Vec<FrameMetrics>,
    pub aggregate: AggregateMetrics,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

struct FrameTally {
    result: MatchResult,
    high_iou: u64,
}

fn tally(frame: u32, gts: &[Box3D], preds: &[Box3D], threshold: f64) -> FrameTally {
    let result = match_frame(frame, gts, preds, threshold);
    let geometric = match_frame(frame, gts, preds, 0.0);
    let high_iou = geometric.pairs.iter().filter(|p| p.iou > HIGH_IOU).count() as u64;
    FrameTally { result, high_iou }
}

/// Scores `pred` against `gt`.
pub fn evaluate_sequence(
    pred: &AnnotationFile,
    gt: &AnnotationFile,
    options: &EvalOptions,
) -> Result<MetricsReport, EvalError> {
    if pred.sequence_id != gt.sequence_id {
        return Err(EvalError::SequenceMismatch {
            pred: pred.sequence_id.clone(),
            gt: gt.sequence_id.clone(),
        });
    }
    let t = options.iou_threshold;
    if !(t > 0.0 && t < 1.0) {
        return Err(EvalError::InvalidThreshold(t));
    }

    let frames: Vec<u32> = pred
        .frames()
        .map(|(f, _)| f)
        .chain(gt.frames().map(|(f, _)| f))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let tallies: Vec<FrameTally> = if options.track_consistent {
        track_consistent_tallies(&frames, pred, gt, t)
    } else {
        frames
            .par_iter()
            .map(|&f| tally(f, gt.frame(f), pred.frame(f), t))
            .collect()
    };

    let mut per_frame = Vec::with_capacity(tallies.len());
    let (mut tp, mut fp, mut fn_, mut high, mut total_gt) = (0u64, 0u64, 0u64, 0u64, 0u64);
    let mut iou_sum = 0.0;
    for FrameTally { result, high_iou } in &tallies {
        let ftp = result.pairs.len() as u64;
        let ffp = result.unmatched_pred.len() as u64;
        let ffn = result.unmatched_gt.len() as u64;
        let fsum: f64 = result.pairs.iter().map(|p| p.iou).sum();
        let (p, r) = (precision(ftp, ffp), recall(ftp, ffn));
        per_frame.push(FrameMetrics {
            frame: result.frame_index,
            mean_iou: if ftp == 0 { 0.0 } else { fsum / ftp as f64 },
            precision: p,
            recall: r,
            f1: f1(p, r),
        });
        tp += ftp;
        fp += ffp;
        fn_ += ffn;
        high += high_iou;
        total_gt += ftp + ffn;
        iou_sum += fsum;
    }

    let mut per_class_counts: BTreeMap<ClassLabel, u64> = BTreeMap::new();
    for (_, b) in pred.boxes() {
        *per_class_counts.entry(b.class_label).or_default() += 1;
    }
    let (p, r) = (precision(tp, fp), recall(tp, fn_));
    Ok(MetricsReport {
        sequence_id: gt.sequence_id.clone(),
        iou_threshold: t,
        track_consistent: options.track_consistent,
        per_frame,
        aggregate: AggregateMetrics {
            mean_iou: if tp == 0 { 0.0 } else { iou_sum / tp as f64 },
            frac_iou_above_0_6: ratio(high, total_gt),
            precision: p,
            recall: r,
            f1: f1(p, r),
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
            per_class_counts,
        },
    })
}

/// Imports the reference at `gt_path` and scores `pred` against it.
///
/// External box tables carry no sequence ID and are taken to describe
/// `pred`'s sequence.
pub fn evaluate_against_file(
    pred: &AnnotationFile,
    gt_path: &Path,
    schema: GtSchema,
    options: &EvalOptions,
) -> Result<MetricsReport, EvalError> {
    let mut gt = import_ground_truth(gt_path, schema)?;
    if schema == GtSchema::ExternalBoxes {
        gt.sequence_id = pred.sequence_id.clone();
    }
    evaluate_sequence(pred, &gt, options)
}

fn track_consistent_tallies(frames: &[u32], pred: &AnnotationFile, gt: &AnnotationFile, t: f64) -> Vec<FrameTally> {
    let mut gt_to_pred: HashMap<u64, u64> = HashMap::new();
    let mut pred_to_gt: HashMap<u64, u64> = HashMap::new();
    let mut out = Vec::with_capacity(frames.len());
    for &f in frames {
        let (gts, preds) = (gt.frame(f), pred.frame(f));
        let result = match_frame_with(f, gts, preds, t, |g, p| {
            gt_to_pred.get(&g).map_or(true, |&q| q == p) && pred_to_gt.get(&p).map_or(true, |&h| h == g)
        });
        for pair in &result.pairs {
            gt_to_pred.insert(pair.gt_track, pair.pred_track);
            pred_to_gt.insert(pair.pred_track, pair.gt_track);
        }
        let geometric = match_frame(f, gts, preds, 0.0);
        let high_iou = geometric.pairs.iter().filter(|p| p.iou > HIGH_IOU).count() as u64;
        out.push(FrameTally { result, high_iou });
    }
    out
}
