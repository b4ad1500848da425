//! Stateless geometric algorithms.
//!
//! Everything in this module is a pure function of its inputs and may be
//! called from any number of threads.
//!
//! Coordinates are meters in the LiDAR (ego) frame with +z up. Rotation is
//! yaw-only about +z.

mod boxes;
mod camera;
mod ground;
mod interpolate;
mod iou;

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use boxes::{bev_polygon, box_corners};
pub use camera::{project_box, project_point, CameraDoc, CameraModel, Projection, ProjectedBox, Rect, Z_NEAR};
pub use ground::{detect_ground_plane, remove_ground, GroundFit, Plane, RansacParams};
pub use interpolate::{interpolate_box, interpolate_track};
pub use iou::{clip_convex, iou_3d, polygon_area, AREA_EPSILON};

/// Smallest dimension a box may shrink to through interpolation or editing.
pub const MIN_DIM: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("invalid camera `{camera}`: {reason}")]
    InvalidCamera { camera: String, reason: String },
    #[error("invalid interpolation pair: {0}")]
    InvalidPair(String),
    #[error("keyframe ordering: start frame {start} must precede end frame {end}")]
    Ordering { start: u32, end: u32 },
    #[error("insufficient data: need at least 3 points, got {0}")]
    InsufficientData(usize),
    #[error("no plane found with at least {min_inliers} inliers")]
    NoPlaneFound { min_inliers: usize },
}

/// A point or direction in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// `(1 - t) * a + t * b`, componentwise.
    pub fn lerp(a: Vec3, b: Vec3, t: f64) -> Vec3 {
        let s = 1.0 - t;
        Vec3::new(s * a.x + t * b.x, s * a.y + t * b.y, s * a.z + t * b.z)
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Object classes that can be annotated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ClassLabel {
    Car,
    Pedestrian,
    Motorcycle,
    Bicycle,
    Truck,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 5] = [
        ClassLabel::Car,
        ClassLabel::Pedestrian,
        ClassLabel::Motorcycle,
        ClassLabel::Bicycle,
        ClassLabel::Truck,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Car => "CAR",
            ClassLabel::Pedestrian => "PEDESTRIAN",
            ClassLabel::Motorcycle => "MOTORCYCLE",
            ClassLabel::Bicycle => "BICYCLE",
            ClassLabel::Truck => "TRUCK",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown class label `{0}`")]
pub struct UnknownClass(pub String);

impl FromStr for ClassLabel {
    type Err = UnknownClass;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ClassLabel::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| UnknownClass(s.to_owned()))
    }
}

/// Wraps an angle into `(-π, π]`.
///
/// Angles already inside the interval are returned bit-for-bit unchanged.
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let tau = 2.0 * PI;
    let mut r = (a + PI).rem_euclid(tau) - PI;
    if r <= -PI {
        r += tau;
    }
    if r > PI {
        r = PI;
    }
    r
}

/// An oriented 3D bounding box with class and track identity.
///
/// `dims` are (length along the box x axis, width along box y, height along
/// box z). `center` is the geometric center, so the box spans
/// `center.z ± dims.z / 2` vertically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box3D {
    pub center: Vec3,
    pub dims: Vec3,
    pub yaw: f64,
    pub class_label: ClassLabel,
    pub track_id: u64,
}

impl Box3D {
    /// Builds a validated box, wrapping `yaw` into `(-π, π]`.
    pub fn new(
        center: Vec3,
        dims: Vec3,
        yaw: f64,
        class_label: ClassLabel,
        track_id: u64,
    ) -> Result<Self, GeometryError> {
        let b = Box3D {
            center,
            dims,
            yaw: wrap_angle(yaw),
            class_label,
            track_id,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !self.center.is_finite() {
            return Err(GeometryError::InvalidBox("center is not finite".into()));
        }
        if !self.dims.is_finite() || self.dims.x <= 0.0 || self.dims.y <= 0.0 || self.dims.z <= 0.0
        {
            return Err(GeometryError::InvalidBox(format!(
                "dims must be finite and positive, got ({}, {}, {})",
                self.dims.x, self.dims.y, self.dims.z
            )));
        }
        if !(self.yaw > -PI && self.yaw <= PI) {
            return Err(GeometryError::InvalidBox(format!(
                "yaw {} outside (-pi, pi]",
                self.yaw
            )));
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        self.dims.x * self.dims.y * self.dims.z
    }

    pub fn bottom(&self) -> f64 {
        self.center.z - 0.5 * self.dims.z
    }

    pub fn top(&self) -> f64 {
        self.center.z + 0.5 * self.dims.z
    }

    /// True if `p` lies inside the box (boundary inclusive).
    pub fn contains(&self, p: Vec3) -> bool {
        let (s, c) = self.yaw.sin_cos();
        let d = p - self.center;
        let lx = c * d.x + s * d.y;
        let ly = -s * d.x + c * d.y;
        lx.abs() <= 0.5 * self.dims.x && ly.abs() <= 0.5 * self.dims.y && d.z.abs() <= 0.5 * self.dims.z
    }
}
