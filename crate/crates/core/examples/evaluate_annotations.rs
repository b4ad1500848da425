//! Scoring an annotation pass against a reference.
//!
//! The "annotator" here starts from the reference, jitters every box, misses
//! a track and adds a spurious one.
//!
//! ```text
//! cargo run --example evaluate_annotations
//! ```

use rand::Rng;
use trackbox::evaluation::{evaluate_sequence, EvalOptions};
use trackbox::synth::{moving_tracks, random_box, rng};
use trackbox::{AnnotationFile, Box3D, Vec3};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gt = moving_tracks("review", 50, 8, 3);
    let mut r = rng(4);
    let mut pred = AnnotationFile::new("review");
    let ghost = random_box(&mut r, 100, 30.0);
    for (frame, boxes) in gt.frames() {
        for b in boxes.iter().filter(|b| b.track_id != 5) {
            let jitter = Vec3::new(r.random_range(-0.15..0.15), r.random_range(-0.15..0.15), 0.0);
            pred.push(frame, Box3D { center: b.center + jitter, ..*b });
        }
        pred.push(frame, ghost);
    }

    for track_consistent in [false, true] {
        let report = evaluate_sequence(
            &pred,
            &gt,
            &EvalOptions {
                track_consistent,
                ..EvalOptions::default()
            },
        )?;
        let a = &report.aggregate;
        println!(
            "track_consistent={track_consistent:<5} P {:.4} R {:.4} F1 {:.4} mean IoU {:.4} IoU>0.6 {:.4}",
            a.precision, a.recall, a.f1, a.mean_iou, a.frac_iou_above_0_6
        );
    }
    Ok(())
}
