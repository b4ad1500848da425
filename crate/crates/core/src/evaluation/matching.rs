use serde::{Deserialize, Serialize};

use crate::geometry::{iou_3d, Box3D};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub gt_track: u64,
    pub pred_track: u64,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub frame_index: u32,
    /// In acceptance order (descending IoU).
    pub pairs: Vec<MatchPair>,
    /// Track IDs in input order.
    pub unmatched_gt: Vec<u64>,
    pub unmatched_pred: Vec<u64>,
}

/// Greedy one-to-one matching of `preds` to `gts`.
///
/// All pairs with `iou >= threshold` and non-zero overlap are ranked by
/// descending IoU, ties broken by `(gt_track, pred_track)` ascending; a pair
/// is accepted when neither side is taken yet.
pub fn match_frame(frame: u32, gts: &[Box3D], preds: &[Box3D], threshold: f64) -> MatchResult {
    match_frame_with(frame, gts, preds, threshold, |_, _| true)
}

/// [`match_frame`] restricted to pairs `(gt_track, pred_track)` for which
/// `allowed` holds.
pub fn match_frame_with(
    frame: u32,
    gts: &[Box3D],
    preds: &[Box3D],
    threshold: f64,
    allowed: impl Fn(u64, u64) -> bool,
) -> MatchResult {
    let mut candidates = Vec::new();
    for (gi, g) in gts.iter().enumerate() {
        for (pi, p) in preds.iter().enumerate() {
            if !allowed(g.track_id, p.track_id) {
                continue;
            }
            let iou = iou_3d(g, p);
            if iou > 0.0 && iou >= threshold {
                candidates.push((iou, gi, pi));
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(gts[a.1].track_id.cmp(&gts[b.1].track_id))
            .then(preds[a.2].track_id.cmp(&preds[b.2].track_id))
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });

    let mut gt_used = vec![false; gts.len()];
    let mut pred_used = vec![false; preds.len()];
    let mut pairs = Vec::new();
    for (iou, gi, pi) in candidates {
        if gt_used[gi] || pred_used[pi] {
            continue;
        }
        gt_used[gi] = true;
        pred_used[pi] = true;
        pairs.push(MatchPair {
            gt_track: gts[gi].track_id,
            pred_track: preds[pi].track_id,
            iou,
        });
    }
    MatchResult {
        frame_index: frame,
        pairs,
        unmatched_gt: gts.iter().zip(&gt_used).filter(|(_, u)| !**u).map(|(b, _)| b.track_id).collect(),
        unmatched_pred: preds
            .iter()
            .zip(&pred_used)
            .filter(|(_, u)| !**u)
            .map(|(b, _)| b.track_id)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ClassLabel, Vec3};

    fn cube(track: u64, x: f64) -> Box3D {
        Box3D::new(Vec3::new(x, 0.0, 0.0), Vec3::new(1.0, 1.0, 1.0), 0.0, ClassLabel::Car, track).unwrap()
    }

    #[test]
    fn identical_sets_match_fully() {
        let gts = [cube(0, 0.0), cube(1, 3.0), cube(2, 6.0)];
        let r = match_frame(0, &gts, &gts, 0.6);
        assert_eq!(r.pairs.len(), 3);
        assert!(r.pairs.iter().all(|p| p.gt_track == p.pred_track && (p.iou - 1.0).abs() < 1e-12));
        assert!(r.unmatched_gt.is_empty() && r.unmatched_pred.is_empty());
    }

    #[test]
    fn empty_preds() {
        let r = match_frame(3, &[cube(4, 0.0), cube(5, 2.0)], &[], 0.5);
        assert!(r.pairs.is_empty());
        assert_eq!(r.unmatched_gt, vec![4, 5]);
    }

    #[test]
    fn crossing_pairs_take_global_best_first() {
        // g0 at 0, g1 at 0.6; p0 at 0.5, p1 at 0.05.
        // IoU(g0,p1) = 0.95/1.05 is the global max; g1 then takes p0 (0.9/1.1).
        let gts = [cube(0, 0.0), cube(1, 0.6)];
        let preds = [cube(0, 0.5), cube(1, 0.05)];
        let r = match_frame(0, &gts, &preds, 0.3);
        assert_eq!((r.pairs[0].gt_track, r.pairs[0].pred_track), (0, 1));
        assert_eq!((r.pairs[1].gt_track, r.pairs[1].pred_track), (1, 0));
        assert!((r.pairs[0].iou - 0.95 / 1.05).abs() < 1e-12);
    }

    #[test]
    fn below_threshold_left_unmatched() {
        let r = match_frame(0, &[cube(0, 0.0)], &[cube(9, 0.5)], 0.6);
        assert!(r.pairs.is_empty());
        assert_eq!((r.unmatched_gt.clone(), r.unmatched_pred.clone()), (vec![0], vec![9]));
    }
}
