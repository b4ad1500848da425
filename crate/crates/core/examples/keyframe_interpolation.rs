//! Keyframe-based track annotation with undo and redo.
//!
//! ```text
//! cargo run --example keyframe_interpolation
//! ```

use trackbox::store::Delta;
use trackbox::{AnnotationStore, Box3D, ClassLabel, Vec3};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut store = AnnotationStore::new("intersection", 21);

    // A car drives through a left turn: keyframes at 0, 10 and 20.
    let start = Box3D::new(Vec3::new(0.0, -10.0, -0.9), Vec3::new(4.4, 1.8, 1.5), 1.5708, ClassLabel::Car, 0)?;
    let car = store.create_annotation(0, start)?;
    store.place_keyframe(10, car, Box3D { center: Vec3::new(-2.0, 2.0, -0.9), yaw: 2.4, ..start })?;
    store.place_keyframe(20, car, Box3D { center: Vec3::new(-14.0, 6.0, -0.9), yaw: 3.1, ..start })?;

    let written = store.interpolate_range(car, 0, 20)?;
    println!("interpolated {written} boxes between keyframes {:?}", store.keyframes(car).unwrap());
    for f in (0..=20).step_by(4) {
        let b = store.get(f, car).unwrap();
        let tag = if store.is_keyframe(f, car) { "key" } else { "   " };
        println!("  frame {f:2} {tag} center ({:7.2}, {:6.2}) yaw {:+.3}", b.center.x, b.center.y, b.yaw);
    }

    // Fix the heading on one interpolated frame, then take it back.
    store.edit_annotation(6, car, Delta::Rotate(0.3))?;
    println!("edited frame 6 yaw: {:+.3}", store.get(6, car).unwrap().yaw);
    let op = store.undo().expect("one edit to undo");
    println!("undo {:?} -> yaw {:+.3}", op.kind, store.get(6, car).unwrap().yaw);
    store.redo();
    println!("redo -> yaw {:+.3}", store.get(6, car).unwrap().yaw);

    while store.undo().is_some() {}
    println!("after undoing everything: {} boxes", store.to_annotation_file().len());
    Ok(())
}
