//! Corners, overlap and image projection of oriented 3D boxes.
//!
//! ```text
//! cargo run --example box_geometry
//! ```

use std::f64::consts::FRAC_PI_4;

use trackbox::geometry::{box_corners, iou_3d, project_box};
use trackbox::synth::six_camera_rig;
use trackbox::{Box3D, ClassLabel, Vec3};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let car = Box3D::new(Vec3::new(12.0, 1.5, -0.9), Vec3::new(4.5, 1.9, 1.6), 0.2, ClassLabel::Car, 0)?;
    println!("corners of a {} at ({}, {}, {}), yaw {}", car.class_label, car.center.x, car.center.y, car.center.z, car.yaw);
    for (i, c) in box_corners(&car).iter().enumerate() {
        println!("  {i}: ({:8.3}, {:8.3}, {:8.3})", c.x, c.y, c.z);
    }

    // The same box nudged forward and turned by 45 degrees.
    let other = Box3D {
        center: car.center + Vec3::new(0.8, 0.0, 0.0),
        yaw: car.yaw + FRAC_PI_4,
        ..car
    };
    println!("IoU(car, car)         = {:.6}", iou_3d(&car, &car));
    println!("IoU(car, shifted+45°) = {:.6}", iou_3d(&car, &other));

    for cam in six_camera_rig() {
        match project_box(&cam, &car) {
            Some(p) => println!(
                "{:<12} rect [{:7.1}, {:6.1}] - [{:7.1}, {:6.1}], {} corners inside",
                cam.name(),
                p.rect.xmin,
                p.rect.ymin,
                p.rect.xmax,
                p.rect.ymax,
                p.visible_corner_count
            ),
            None => println!("{:<12} not visible", cam.name()),
        }
    }
    Ok(())
}
