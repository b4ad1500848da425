use std::collections::BTreeSet;

use proptest::prelude::*;
use trackbox::evaluation::{evaluate_sequence, f1, match_frame, precision, recall, EvalOptions};
use trackbox::{AnnotationFile, Box3D, ClassLabel, Vec3};

fn cube(track: u64, x: f64, class: ClassLabel) -> Box3D {
    Box3D::new(Vec3::new(x, 0.0, 0.0), Vec3::new(1.0, 1.0, 1.0), 0.0, class, track).unwrap()
}

/// Three frames whose every number is worked out by hand:
///
/// | frame | pairs (IoU)        | tp | fp | fn |
/// |-------|--------------------|----|----|----|
/// | 0     | 1/3, 1             | 2  | 0  | 0  |
/// | 1     | 2/3, stray pred    | 1  | 1  | 0  |
/// | 2     | lone reference     | 0  | 0  | 1  |
#[test]
fn three_frame_hand_oracle() {
    use ClassLabel::*;
    let mut gt = AnnotationFile::new("toy");
    let mut pred = AnnotationFile::new("toy");
    gt.push(0, cube(0, 0.0, Car));
    gt.push(0, cube(1, 10.0, Car));
    pred.push(0, cube(5, 0.5, Car)); // overlap 0.5 of 1.5 => 1/3
    pred.push(0, cube(6, 10.0, Car));
    gt.push(1, cube(0, 0.0, Car));
    pred.push(1, cube(5, 0.2, Car)); // overlap 0.8 of 1.2 => 2/3
    pred.push(1, cube(7, 50.0, Pedestrian));
    gt.push(2, cube(0, 0.0, Car));

    let r = evaluate_sequence(&pred, &gt, &EvalOptions { iou_threshold: 0.3, track_consistent: false }).unwrap();
    let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
    let rows: Vec<_> = r.per_frame.iter().map(|m| (m.frame, m.mean_iou, m.precision, m.recall, m.f1)).collect();
    let want = [
        (0, 2.0 / 3.0, 1.0, 1.0, 1.0),
        (1, 2.0 / 3.0, 0.5, 1.0, 2.0 / 3.0),
        (2, 0.0, 0.0, 0.0, 0.0),
    ];
    assert_eq!(rows.len(), 3);
    for (got, want) in rows.iter().zip(want) {
        assert_eq!(got.0, want.0);
        assert!(close(got.1, want.1) && close(got.2, want.2) && close(got.3, want.3) && close(got.4, want.4), "{got:?} vs {want:?}");
    }
    let a = &r.aggregate;
    assert_eq!((a.true_positives, a.false_positives, a.false_negatives), (3, 1, 1));
    assert_eq!((a.precision, a.recall, a.f1), (0.75, 0.75, 0.75));
    assert!(close(a.mean_iou, 2.0 / 3.0));
    assert_eq!(a.frac_iou_above_0_6, 0.5);
    assert_eq!(a.per_class_counts.get(&Car), Some(&3));
    assert_eq!(a.per_class_counts.get(&Pedestrian), Some(&1));
    assert_eq!(a.per_class_counts.values().sum::<u64>(), 4);

    // At the default threshold the 1/3 pair no longer counts.
    let r = evaluate_sequence(&pred, &gt, &EvalOptions::default()).unwrap();
    let a = &r.aggregate;
    assert_eq!((a.true_positives, a.false_positives, a.false_negatives), (2, 2, 2));
    assert_eq!(a.frac_iou_above_0_6, 0.5);
}

fn arb_boxes(max: usize, track_base: u64) -> impl Strategy<Value = Vec<Box3D>> {
    prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64, 0.5..3.0f64, 0.5..2.0f64, -3.2..3.2f64), 0..=max).prop_map(
        move |v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (x, y, l, w, yaw))| {
                    Box3D::new(Vec3::new(x, y, 0.0), Vec3::new(l, w, 1.5), yaw, ClassLabel::Car, track_base + i as u64)
                        .unwrap()
                })
                .collect()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn matching_accounts_for_every_box(gts in arb_boxes(6, 0), preds in arb_boxes(6, 100), t in 0.05..0.95f64) {
        let m = match_frame(0, &gts, &preds, t);
        let tp = m.pairs.len();
        prop_assert_eq!(tp + m.unmatched_gt.len(), gts.len());
        prop_assert_eq!(tp + m.unmatched_pred.len(), preds.len());
        let g: BTreeSet<u64> = m.pairs.iter().map(|p| p.gt_track).chain(m.unmatched_gt.iter().copied()).collect();
        let p: BTreeSet<u64> = m.pairs.iter().map(|p| p.pred_track).chain(m.unmatched_pred.iter().copied()).collect();
        prop_assert_eq!(g.len(), gts.len());
        prop_assert_eq!(p.len(), preds.len());
        for pair in &m.pairs {
            prop_assert!(pair.iou >= t && pair.iou > 0.0);
        }
    }

    #[test]
    fn matching_is_symmetric(gts in arb_boxes(5, 0), preds in arb_boxes(5, 100), t in 0.05..0.95f64) {
        let ab = match_frame(0, &gts, &preds, t);
        let ba = match_frame(0, &preds, &gts, t);
        let mut x: Vec<_> = ab.pairs.iter().map(|p| (p.gt_track, p.pred_track, p.iou)).collect();
        let mut y: Vec<_> = ba.pairs.iter().map(|p| (p.pred_track, p.gt_track, p.iou)).collect();
        x.sort_by(|a, b| a.partial_cmp(b).unwrap());
        y.sort_by(|a, b| a.partial_cmp(b).unwrap());
        prop_assert_eq!(x, y);
        let sorted = |v: &[u64]| { let mut v = v.to_vec(); v.sort(); v };
        prop_assert_eq!(sorted(&ab.unmatched_gt), sorted(&ba.unmatched_pred));
        prop_assert_eq!(sorted(&ab.unmatched_pred), sorted(&ba.unmatched_gt));
    }

    #[test]
    fn f1_bounds(tp in 0u64..1000, fp in 0u64..1000, fn_ in 0u64..1000) {
        let (p, r) = (precision(tp, fp), recall(tp, fn_));
        let f = f1(p, r);
        prop_assert!((0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&r));
        prop_assert!(f >= 0.0 && f <= (p + r) / 2.0 + 1e-15);
        prop_assert!(f >= p.min(r) - 1e-15);
        if p == r {
            prop_assert!((f - p).abs() < 1e-15);
        }
    }

    #[test]
    fn identical_sequences_score_one(frames in prop::collection::vec(arb_boxes(4, 0), 1..6)) {
        let mut file = AnnotationFile::new("p");
        for (f, boxes) in frames.iter().enumerate() {
            for b in boxes {
                file.push(f as u32, *b);
            }
        }
        prop_assume!(!file.is_empty());
        let r = evaluate_sequence(&file, &file, &EvalOptions::default()).unwrap();
        let a = &r.aggregate;
        // Each box pairs with its own copy first: IoU 1 heads the queue.
        prop_assert_eq!((a.precision, a.recall, a.f1, a.mean_iou), (1.0, 1.0, 1.0, 1.0));
        prop_assert_eq!(a.frac_iou_above_0_6, 1.0);
    }
}
