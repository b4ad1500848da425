use super::{wrap_angle, Box3D, GeometryError, Vec3, MIN_DIM};

/// Linear interpolation between two keyframe boxes of the same track.
///
/// Center and dims are componentwise linear in `t`; dims are clamped below at
/// [`MIN_DIM`]. Yaw follows the shortest arc, so `3.0 -> -3.0` passes through
/// ±π rather than 0. `t == 0` and `t == 1` return the endpoints unchanged.
pub fn interpolate_box(start: &Box3D, end: &Box3D, t: f64) -> Result<Box3D, GeometryError> {
    if start.track_id != end.track_id {
        return Err(GeometryError::InvalidPair(format!(
            "track ids differ ({} vs {})",
            start.track_id, end.track_id
        )));
    }
    if start.class_label != end.class_label {
        return Err(GeometryError::InvalidPair(format!(
            "class labels differ ({} vs {})",
            start.class_label, end.class_label
        )));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(GeometryError::InvalidPair(format!("t = {t} outside [0, 1]")));
    }
    if t == 0.0 {
        return Ok(*start);
    }
    if t == 1.0 {
        return Ok(*end);
    }
    let dims = Vec3::lerp(start.dims, end.dims, t);
    let delta = wrap_angle(end.yaw - start.yaw);
    Ok(Box3D {
        center: Vec3::lerp(start.center, end.center, t),
        dims: Vec3::new(dims.x.max(MIN_DIM), dims.y.max(MIN_DIM), dims.z.max(MIN_DIM)),
        yaw: wrap_angle(start.yaw + t * delta),
        class_label: start.class_label,
        track_id: start.track_id,
    })
}

/// Boxes for every frame strictly between two keyframes.
///
/// Frame `f` gets `t = (f - start) / (end - start)`.
pub fn interpolate_track(
    start: (u32, &Box3D),
    end: (u32, &Box3D),
) -> Result<Vec<(u32, Box3D)>, GeometryError> {
    let (f0, b0) = start;
    let (f1, b1) = end;
    if f0 >= f1 {
        return Err(GeometryError::Ordering { start: f0, end: f1 });
    }
    let span = f64::from(f1 - f0);
    ((f0 + 1)..f1)
        .map(|f| interpolate_box(b0, b1, f64::from(f - f0) / span).map(|b| (f, b)))
        .collect()
}
