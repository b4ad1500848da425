use nalgebra::{Matrix3, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

use super::{GeometryError, Vec3};

/// The plane `{p : normal · p + offset = 0}` with unit `normal`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub normal: Vec3,
    pub offset: f64,
}

impl Plane {
    /// Normalises `normal`; returns `None` for a (near) zero vector.
    pub fn new(normal: Vec3, offset: f64) -> Option<Self> {
        let n = normal.norm();
        if !(n > 1e-12) || !offset.is_finite() {
            return None;
        }
        Some(Self {
            normal: normal * (1.0 / n),
            offset: offset / n,
        })
    }

    pub fn signed_distance(&self, p: Vec3) -> f64 {
        self.normal.dot(p) + self.offset
    }

    fn oriented_up(self) -> Self {
        if self.normal.z < 0.0 {
            Self {
                normal: self.normal * -1.0,
                offset: -self.offset,
            }
        } else {
            self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacParams {
    pub iterations: usize,
    /// Maximum point-to-plane distance of an inlier, meters.
    pub inlier_distance: f64,
    /// Minimum share of all points that must support the plane.
    pub min_inlier_fraction: f64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            iterations: 200,
            inlier_distance: 0.15,
            min_inlier_fraction: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundFit {
    pub plane: Plane,
    /// Indices into the input, ascending.
    pub inliers: Vec<usize>,
}

fn inliers_of(points: &[Vec3], plane: &Plane, dist: f64) -> Vec<usize> {
    points
        .iter()
        .enumerate()
        .filter(|(_, p)| plane.signed_distance(**p).abs() <= dist)
        .map(|(i, _)| i)
        .collect()
}

/// Total least squares plane through `idx`.
fn refit(points: &[Vec3], idx: &[usize]) -> Option<Plane> {
    let n = idx.len() as f64;
    let c = idx.iter().fold(Vec3::default(), |a, &i| a + points[i]) * (1.0 / n);
    let mut cov = Matrix3::<f64>::zeros();
    for &i in idx {
        let d = points[i] - c;
        let v = nalgebra::Vector3::new(d.x, d.y, d.z);
        cov += v * v.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let k = eig.eigenvalues.imin();
    let col = eig.eigenvectors.column(k);
    let normal = Vec3::new(col[0], col[1], col[2]);
    Plane::new(normal, -normal.dot(c))
}

/// Finds the dominant plane with RANSAC, then refines it by least squares
/// over the consensus set.
///
/// Deterministic for a fixed `seed`. The returned normal has `z >= 0`.
pub fn detect_ground_plane(
    points: &[Vec3],
    seed: u64,
    params: &RansacParams,
) -> Result<GroundFit, GeometryError> {
    if points.len() < 3 {
        return Err(GeometryError::InsufficientData(points.len()));
    }
    let min_inliers = ((params.min_inlier_fraction * points.len() as f64).ceil() as usize).max(3);
    let mut rng = Pcg64::seed_from_u64(seed);
    let n = points.len();

    let mut best: Option<(Plane, usize)> = None;
    for _ in 0..params.iterations {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let k = rng.random_range(0..n);
        if k == i || k == j {
            continue;
        }
        let (a, b, c) = (points[i], points[j], points[k]);
        let normal = (b - a).cross(c - a);
        let Some(plane) = Plane::new(normal, -normal.dot(a)) else {
            continue;
        };
        let count = points
            .iter()
            .filter(|p| plane.signed_distance(**p).abs() <= params.inlier_distance)
            .count();
        if best.map_or(true, |(_, c)| count > c) {
            best = Some((plane, count));
        }
    }

    let (candidate, count) = match best {
        Some(b) if b.1 >= min_inliers => b,
        _ => return Err(GeometryError::NoPlaneFound { min_inliers }),
    };
    let support = inliers_of(points, &candidate, params.inlier_distance);
    debug_assert_eq!(support.len(), count);

    let refined = refit(points, &support)
        .map(|p| (inliers_of(points, &p, params.inlier_distance), p))
        .filter(|(idx, _)| idx.len() >= min_inliers);
    let (inliers, plane) = refined.unwrap_or((support, candidate));
    Ok(GroundFit {
        plane: plane.oriented_up(),
        inliers,
    })
}

/// Keeps exactly the points whose signed distance to `plane` exceeds
/// `margin`.
pub fn remove_ground<T: Copy>(points: &[T], position: impl Fn(&T) -> Vec3, plane: &Plane, margin: f64) -> Vec<T> {
    points
        .iter()
        .filter(|p| plane.signed_distance(position(p)) > margin)
        .copied()
        .collect()
}
