use super::{Box3D, Vec3};

// Local footprint corner signs, counter-clockwise seen from +z.
const FOOTPRINT: [(f64, f64); 4] = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)];

/// The 8 vertices of `b`.
///
/// Order: indices 0..4 are the bottom face, counter-clockwise seen from +z,
/// starting at the (+length, +width) corner; indices 4..8 are the top face
/// in the same order, so `corners[i + 4]` sits directly above `corners[i]`.
pub fn box_corners(b: &Box3D) -> [Vec3; 8] {
    let footprint = bev_polygon(b);
    let (lo, hi) = (b.bottom(), b.top());
    let mut out = [Vec3::default(); 8];
    for (i, p) in footprint.iter().enumerate() {
        out[i] = Vec3::new(p[0], p[1], lo);
        out[i + 4] = Vec3::new(p[0], p[1], hi);
    }
    out
}

/// The box footprint as a counter-clockwise quadrilateral in the z = 0 plane.
pub fn bev_polygon(b: &Box3D) -> [[f64; 2]; 4] {
    let (s, c) = b.yaw.sin_cos();
    let hl = 0.5 * b.dims.x;
    let hw = 0.5 * b.dims.y;
    FOOTPRINT.map(|(sx, sy)| {
        let lx = sx * hl;
        let ly = sy * hw;
        [b.center.x + lx * c - ly * s, b.center.y + lx * s + ly * c]
    })
}
