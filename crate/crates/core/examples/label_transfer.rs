//! Batch 3D-to-2D label transfer over a synthetic six-camera sequence.
//!
//! Writes a sequence to a temporary directory, then projects every annotated
//! box into every camera, the way `trackbox project` does.
//!
//! ```text
//! cargo run --example label_transfer
//! ```

use std::collections::BTreeMap;

use trackbox::dataset::{load_annotations, load_manifest};
use trackbox::geometry::project_box;
use trackbox::synth::write_sequence;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let manifest_path = write_sequence(dir.path(), "surround-demo", 20, 12, 7)?;
    let manifest = load_manifest(&manifest_path)?;
    let gt = load_annotations(dir.path().join("gt.json"))?;
    println!(
        "{} frames, {} cameras, {} boxes",
        manifest.frame_count(),
        manifest.cameras.len(),
        gt.len()
    );

    let mut per_camera: BTreeMap<&str, usize> = BTreeMap::new();
    let mut cameras_per_box = [0usize; 7];
    for (_, b) in gt.boxes() {
        let seen: Vec<_> = manifest.cameras.iter().filter_map(|c| project_box(c, b)).collect();
        for p in &seen {
            *per_camera.entry(manifest.camera(&p.camera).unwrap().name()).or_default() += 1;
        }
        cameras_per_box[seen.len().min(6)] += 1;
    }
    for (cam, n) in &per_camera {
        println!("{cam:<12} {n:4} labels");
    }
    for (k, n) in cameras_per_box.iter().enumerate().filter(|(_, n)| **n > 0) {
        println!("{n:4} boxes visible in {k} camera(s)");
    }
    Ok(())
}
