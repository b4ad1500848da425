//! RANSAC ground-plane detection and removal on a sloped synthetic scene.
//!
//! ```text
//! cargo run --example ground_removal -- [seed]
//! ```

use trackbox::geometry::{detect_ground_plane, remove_ground, RansacParams};
use trackbox::synth::{ground_cloud, rng};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(42);
    let grade = 2f64.to_radians().tan();
    let cloud = ground_cloud(&mut rng(seed), 20_000, grade, 1.8, 0.02, 0.05);

    let fit = detect_ground_plane(&cloud, seed, &RansacParams::default())?;
    let n = fit.plane.normal;
    let tilt = n.z.clamp(-1.0, 1.0).acos().to_degrees();
    println!("normal ({:.4}, {:.4}, {:.4}), offset {:.3}", n.x, n.y, n.z, fit.plane.offset);
    println!("tilt {tilt:.3}° (true slope 2°), {} inliers of {}", fit.inliers.len(), cloud.len());

    let objects = remove_ground(&cloud, |p| *p, &fit.plane, 0.2);
    println!("{} points left after removing the ground", objects.len());
    Ok(())
}
