use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{box_corners, Box3D, GeometryError, Vec3};

/// Points at or closer than this camera-frame depth (meters) are treated as
/// behind the camera.
pub const Z_NEAR: f64 = 0.1;

const ORTHO_TOL: f64 = 1e-6;

/// Pinhole camera with a rigid LiDAR-to-camera transform.
///
/// Camera frame convention: +z along the optical axis, +x right, +y down.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CameraDoc", into = "CameraDoc")]
pub struct CameraModel {
    name: String,
    intrinsics: Matrix3<f64>,
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
    width: u32,
    height: u32,
}

/// Wire form of a camera: matrices are row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraDoc {
    pub name: String,
    pub intrinsics: [f64; 9],
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
    pub width: u32,
    pub height: u32,
}

impl CameraModel {
    /// Validates and builds a camera. Errors name the offending field.
    pub fn new(
        name: impl Into<String>,
        intrinsics: Matrix3<f64>,
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        width: u32,
        height: u32,
    ) -> Result<Self, GeometryError> {
        let name = name.into();
        let bad = |reason: String| GeometryError::InvalidCamera {
            camera: name.clone(),
            reason,
        };
        if name.is_empty() {
            return Err(bad("name: must not be empty".into()));
        }
        if width == 0 || height == 0 {
            return Err(bad(format!("width/height: must be positive, got {width}x{height}")));
        }
        if intrinsics.iter().any(|v| !v.is_finite()) {
            return Err(bad("intrinsics: non-finite entry".into()));
        }
        let (fx, fy, cx, cy) = (intrinsics[(0, 0)], intrinsics[(1, 1)], intrinsics[(0, 2)], intrinsics[(1, 2)]);
        if fx <= 0.0 {
            return Err(bad(format!("intrinsics.fx: must be positive, got {fx}")));
        }
        if fy <= 0.0 {
            return Err(bad(format!("intrinsics.fy: must be positive, got {fy}")));
        }
        if !(0.0..=f64::from(width)).contains(&cx) {
            return Err(bad(format!("intrinsics.cx: {cx} outside [0, {width}]")));
        }
        if !(0.0..=f64::from(height)).contains(&cy) {
            return Err(bad(format!("intrinsics.cy: {cy} outside [0, {height}]")));
        }
        if intrinsics[(1, 0)] != 0.0 || intrinsics[(2, 0)] != 0.0 || intrinsics[(2, 1)] != 0.0 || intrinsics[(2, 2)] != 1.0 {
            return Err(bad("intrinsics: bottom row must be [0, 0, 1] and k[1][0] zero".into()));
        }
        if rotation.iter().chain(translation.iter()).any(|v| !v.is_finite()) {
            return Err(bad("extrinsics: non-finite entry".into()));
        }
        let gram = rotation.transpose() * rotation - Matrix3::identity();
        if gram.amax() > ORTHO_TOL {
            return Err(bad(format!(
                "rotation: not orthonormal (max |R^T R - I| = {:.3e})",
                gram.amax()
            )));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > ORTHO_TOL {
            return Err(bad(format!("rotation: determinant {det} is not +1")));
        }
        Ok(Self {
            name,
            intrinsics,
            rotation,
            translation,
            width,
            height,
        })
    }

    /// Convenience constructor from focal lengths and principal point.
    pub fn pinhole(
        name: impl Into<String>,
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        width: u32,
        height: u32,
    ) -> Result<Self, GeometryError> {
        let k = Matrix3::new(fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0);
        Self::new(name, k, rotation, translation, width, height)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn intrinsics(&self) -> &Matrix3<f64> {
        &self.intrinsics
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Maps a LiDAR-frame point into the camera frame.
    pub fn to_camera_frame(&self, p: Vec3) -> Vec3 {
        let q = self.rotation * Vector3::new(p.x, p.y, p.z) + self.translation;
        Vec3::new(q.x, q.y, q.z)
    }
}

impl TryFrom<CameraDoc> for CameraModel {
    type Error = GeometryError;

    fn try_from(d: CameraDoc) -> Result<Self, Self::Error> {
        CameraModel::new(
            d.name,
            Matrix3::from_row_slice(&d.intrinsics),
            Matrix3::from_row_slice(&d.rotation),
            Vector3::from_column_slice(&d.translation),
            d.width,
            d.height,
        )
    }
}

impl From<CameraModel> for CameraDoc {
    fn from(c: CameraModel) -> Self {
        let row_major = |m: &Matrix3<f64>| {
            let mut out = [0.0; 9];
            for r in 0..3 {
                for k in 0..3 {
                    out[r * 3 + k] = m[(r, k)];
                }
            }
            out
        };
        CameraDoc {
            intrinsics: row_major(&c.intrinsics),
            rotation: row_major(&c.rotation),
            translation: [c.translation.x, c.translation.y, c.translation.z],
            name: c.name,
            width: c.width,
            height: c.height,
        }
    }
}

/// Result of projecting a single point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    /// Pixel coordinates; may lie outside the image.
    Image([f64; 2]),
    BehindCamera,
}

/// Projects a LiDAR-frame point to pixel coordinates.
pub fn project_point(cam: &CameraModel, p: Vec3) -> Projection {
    let q = cam.to_camera_frame(p);
    if q.z <= Z_NEAR {
        return Projection::BehindCamera;
    }
    let k = &cam.intrinsics;
    let (fx, fy, cx, cy, skew) = (k[(0, 0)], k[(1, 1)], k[(0, 2)], k[(1, 2)], k[(0, 1)]);
    let mut u = fx * q.x / q.z + cx;
    if skew != 0.0 {
        u += skew * q.y / q.z;
    }
    Projection::Image([u, fy * q.y / q.z + cy])
}

/// Axis-aligned image rectangle in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl Rect {
    pub fn area(&self) -> f64 {
        (self.xmax - self.xmin).max(0.0) * (self.ymax - self.ymin).max(0.0)
    }
}

/// A 3D box transferred into one camera image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedBox {
    pub camera: String,
    /// Pixel position of each corner in [`box_corners`] order; `None` for
    /// corners behind the camera.
    pub corners_px: [Option<[f64; 2]>; 8],
    /// Hull of the in-front corners, clipped to the image.
    pub rect: Rect,
    /// In-front corners whose pixel lies inside the image.
    pub visible_corner_count: u8,
}

/// Projects all corners of `b` and returns the clipped image-space hull, or
/// `None` when no corner is in front of the camera or the clipped hull has
/// zero area.
///
/// Corners behind the camera are dropped from the hull; there is no clipping
/// against the near plane.
pub fn project_box(cam: &CameraModel, b: &Box3D) -> Option<ProjectedBox> {
    let mut corners_px = [None; 8];
    let (mut xmin, mut ymin) = (f64::INFINITY, f64::INFINITY);
    let (mut xmax, mut ymax) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let (w, h) = (f64::from(cam.width), f64::from(cam.height));
    let mut visible = 0u8;
    for (slot, corner) in corners_px.iter_mut().zip(box_corners(b)) {
        if let Projection::Image([u, v]) = project_point(cam, corner) {
            *slot = Some([u, v]);
            xmin = xmin.min(u);
            ymin = ymin.min(v);
            xmax = xmax.max(u);
            ymax = ymax.max(v);
            if (0.0..=w).contains(&u) && (0.0..=h).contains(&v) {
                visible += 1;
            }
        }
    }
    if corners_px.iter().all(Option::is_none) {
        return None;
    }
    let rect = Rect {
        xmin: xmin.clamp(0.0, w),
        ymin: ymin.clamp(0.0, h),
        xmax: xmax.clamp(0.0, w),
        ymax: ymax.clamp(0.0, h),
    };
    if rect.xmax <= rect.xmin || rect.ymax <= rect.ymin {
        return None;
    }
    Some(ProjectedBox {
        camera: cam.name.clone(),
        corners_px,
        rect,
        visible_corner_count: visible,
    })
}
