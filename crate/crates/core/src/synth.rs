//! Synthetic sensor rigs and sequences.
//!
//! Used by the runnable examples and the test suites; everything here is
//! deterministic for a given seed.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use rand_pcg::Pcg64;

use crate::dataset::{
    save_annotations, write_point_cloud, AnnotationFile, DatasetError, FrameRecord, LidarPoint, ManifestDoc,
};
use crate::geometry::{Box3D, CameraDoc, CameraModel, ClassLabel, Vec3};

pub fn rng(seed: u64) -> Pcg64 {
    Pcg64::seed_from_u64(seed)
}

/// Camera looking horizontally along `heading` (radians, from +x toward +y)
/// from `mount` in the LiDAR frame.
pub fn horizontal_camera(
    name: &str,
    heading: f64,
    mount: Vec3,
    focal: f64,
    width: u32,
    height: u32,
) -> CameraModel {
    let (s, c) = heading.sin_cos();
    // rows: camera x (right), y (down), z (forward) expressed in LiDAR axes
    let r = Matrix3::new(s, -c, 0.0, 0.0, 0.0, -1.0, c, s, 0.0);
    let t = -(r * Vector3::new(mount.x, mount.y, mount.z));
    CameraModel::pinhole(
        name,
        focal,
        focal,
        f64::from(width) / 2.0,
        f64::from(height) / 2.0,
        r,
        t,
        width,
        height,
    )
    .expect("synthetic camera is valid")
}

pub const RIG_CAMERAS: [&str; 6] = [
    "front",
    "front_left",
    "back_left",
    "back",
    "back_right",
    "front_right",
];

/// Six 1600×900 cameras at 60° spacing with ~72° horizontal field of view,
/// mounted 1.6 m above the LiDAR origin.
pub fn six_camera_rig() -> Vec<CameraModel> {
    let focal = 800.0 / (36f64.to_radians()).tan();
    RIG_CAMERAS
        .iter()
        .enumerate()
        .map(|(i, name)| {
            horizontal_camera(name, i as f64 * PI / 3.0, Vec3::new(0.0, 0.0, 1.6), focal, 1600, 900)
        })
        .collect()
}

fn class_dims(class: ClassLabel) -> Vec3 {
    match class {
        ClassLabel::Car => Vec3::new(4.5, 1.9, 1.6),
        ClassLabel::Pedestrian => Vec3::new(0.7, 0.7, 1.8),
        ClassLabel::Motorcycle => Vec3::new(2.1, 0.8, 1.5),
        ClassLabel::Bicycle => Vec3::new(1.8, 0.6, 1.6),
        ClassLabel::Truck => Vec3::new(9.0, 2.6, 3.4),
    }
}

/// A plausible road user anywhere within `radius` meters.
pub fn random_box(rng: &mut impl Rng, track_id: u64, radius: f64) -> Box3D {
    let class = ClassLabel::ALL[rng.random_range(0..ClassLabel::ALL.len())];
    let base = class_dims(class);
    let scale = |v: f64, r: &mut dyn FnMut() -> f64| v * (0.8 + 0.4 * r());
    let mut u = || rng.random::<f64>();
    let dims = Vec3::new(scale(base.x, &mut u), scale(base.y, &mut u), scale(base.z, &mut u));
    let center = Vec3::new(
        (u() * 2.0 - 1.0) * radius,
        (u() * 2.0 - 1.0) * radius,
        dims.z / 2.0 - 1.8 + (u() - 0.5) * 0.2,
    );
    Box3D::new(center, dims, (u() * 2.0 - 1.0) * PI, class, track_id).expect("valid synthetic box")
}

/// Tracks moving on straight lines with slowly turning heading.
pub fn moving_tracks(sequence_id: &str, frames: u32, tracks: u64, seed: u64) -> AnnotationFile {
    let mut r = rng(seed);
    let mut out = AnnotationFile::new(sequence_id);
    let movers: Vec<(Box3D, Vec3, f64)> = (0..tracks)
        .map(|t| {
            let b = random_box(&mut r, t, 40.0);
            let speed = r.random_range(0.0..0.5);
            let vel = Vec3::new(b.yaw.cos() * speed, b.yaw.sin() * speed, 0.0);
            (b, vel, r.random_range(-0.01..0.01))
        })
        .collect();
    for f in 0..frames {
        for (b, vel, turn) in &movers {
            let k = f64::from(f);
            let moved = Box3D::new(b.center + *vel * k, b.dims, b.yaw + turn * k, b.class_label, b.track_id)
                .expect("valid moved box");
            out.push(f, moved);
        }
    }
    out
}

/// Ground points on `z = slope_x * x - height` with Gaussian noise, plus a
/// share of outliers above the ground.
pub fn ground_cloud(rng: &mut impl Rng, n: usize, slope_x: f64, height: f64, sigma: f64, outlier_frac: f64) -> Vec<Vec3> {
    let noise = Normal::new(0.0, sigma).expect("valid sigma");
    (0..n)
        .map(|_| {
            let x = rng.random_range(-30.0..30.0);
            let y = rng.random_range(-30.0..30.0);
            let z = if rng.random::<f64>() < outlier_frac {
                slope_x * x - height + rng.random_range(0.5..3.0)
            } else {
                slope_x * x - height + if sigma > 0.0 { noise.sample(rng) } else { 0.0 }
            };
            Vec3::new(x, y, z)
        })
        .collect()
}

/// Samples points on the surfaces of `boxes` (top and sides).
fn box_points(rng: &mut impl Rng, boxes: &[Box3D], per_box: usize) -> Vec<Vec3> {
    let mut out = Vec::new();
    for b in boxes {
        let (s, c) = b.yaw.sin_cos();
        for _ in 0..per_box {
            let lx = (rng.random::<f64>() - 0.5) * b.dims.x;
            let ly = (rng.random::<f64>() - 0.5) * b.dims.y;
            let lz = (rng.random::<f64>() - 0.5) * b.dims.z;
            out.push(Vec3::new(b.center.x + lx * c - ly * s, b.center.y + lx * s + ly * c, b.center.z + lz));
        }
    }
    out
}

/// Writes a complete sequence directory (manifest, point clouds, placeholder
/// images and `gt.json`) and returns the manifest path.
pub fn write_sequence(
    dir: &Path,
    sequence_id: &str,
    frames: u32,
    tracks: u64,
    seed: u64,
) -> Result<PathBuf, DatasetError> {
    let io = |p: &Path, e| DatasetError::Io {
        path: p.to_path_buf(),
        source: e,
    };
    let cams = six_camera_rig();
    let gt = moving_tracks(sequence_id, frames, tracks, seed);
    let mut r = rng(seed ^ 0x9e37_79b9);
    std::fs::create_dir_all(dir.join("lidar")).map_err(|e| io(dir, e))?;
    for cam in &cams {
        std::fs::create_dir_all(dir.join("images").join(cam.name())).map_err(|e| io(dir, e))?;
    }
    let mut records = Vec::new();
    for f in 0..frames {
        let mut pts = ground_cloud(&mut r, 2000, 0.0, 1.8, 0.02, 0.0);
        pts.extend(box_points(&mut r, gt.frame(f), 60));
        let cloud: Vec<LidarPoint> = pts
            .into_iter()
            .map(|p| LidarPoint {
                position: p,
                intensity: r.random::<f32>(),
            })
            .collect();
        let pc = format!("lidar/{f:06}.bin");
        write_point_cloud(dir.join(&pc), &cloud)?;
        let mut images = BTreeMap::new();
        for cam in &cams {
            let rel = format!("images/{}/{f:06}.jpg", cam.name());
            let p = dir.join(&rel);
            std::fs::write(&p, format!("synthetic {} frame {f}", cam.name())).map_err(|e| io(&p, e))?;
            images.insert(cam.name().to_owned(), rel);
        }
        records.push(FrameRecord {
            index: f,
            timestamp: 1_500_000_000_000_000 + u64::from(f) * 33_333,
            pointcloud: pc,
            images,
        });
    }
    let doc = ManifestDoc {
        sequence_id: sequence_id.to_owned(),
        frames: records,
        cameras: cams.into_iter().map(CameraDoc::from).collect(),
    };
    let manifest = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&doc).expect("manifest serializes");
    std::fs::write(&manifest, text).map_err(|e| io(&manifest, e))?;
    save_annotations(&gt, dir.join("gt.json"))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::load_manifest;
    use crate::geometry::{project_point, Projection};

    #[test]
    fn rig_sees_all_around() {
        let rig = six_camera_rig();
        for k in 0..12 {
            let a = k as f64 * PI / 6.0 + 0.05;
            let p = Vec3::new(20.0 * a.cos(), 20.0 * a.sin(), 0.0);
            let seen = rig.iter().filter(|c| {
                matches!(project_point(c, p), Projection::Image([u, v]) if (0.0..=1600.0).contains(&u) && (0.0..=900.0).contains(&v))
            });
            assert!(seen.count() >= 1, "direction {a} not covered");
        }
        // straight ahead lands on the front camera's principal column
        match project_point(&rig[0], Vec3::new(10.0, 0.0, 1.6)) {
            Projection::Image([u, v]) => assert!((u - 800.0).abs() < 1e-9 && (v - 450.0).abs() < 1e-9),
            Projection::BehindCamera => panic!(),
        }
    }

    #[test]
    fn written_sequence_loads() {
        let dir = tempfile::tempdir().unwrap();
        let m = write_sequence(dir.path(), "demo", 3, 4, 1).unwrap();
        let man = load_manifest(m).unwrap();
        assert_eq!(man.frame_count(), 3);
        assert_eq!(man.cameras.len(), 6);
    }
}
