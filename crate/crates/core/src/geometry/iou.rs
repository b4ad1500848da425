use std::cmp::Ordering;

use super::{bev_polygon, Box3D};

/// Shoelace areas below this (m²) are treated as zero.
pub const AREA_EPSILON: f64 = 1e-9;

/// Clips convex polygon `subject` against convex, counter-clockwise polygon
/// `clip` (Sutherland–Hodgman).
pub fn clip_convex(subject: &[[f64; 2]], clip: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if out.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % n];
        let side = |p: [f64; 2]| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        let input = std::mem::take(&mut out);
        let m = input.len();
        for j in 0..m {
            let cur = input[j];
            let prev = input[(j + m - 1) % m];
            let (sc, sp) = (side(cur), side(prev));
            let cur_in = sc >= 0.0;
            let prev_in = sp >= 0.0;
            if cur_in != prev_in {
                let t = sp / (sp - sc);
                out.push([prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])]);
            }
            if cur_in {
                out.push(cur);
            }
        }
    }
    out
}

/// Unsigned area of a simple polygon; anything below [`AREA_EPSILON`] is 0.
pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let n = poly.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum();
    let area = 0.5 * twice.abs();
    if area < AREA_EPSILON {
        0.0
    } else {
        area
    }
}

fn box_order(a: &Box3D, b: &Box3D) -> Ordering {
    let key = |x: &Box3D| {
        [x.center.x, x.center.y, x.center.z, x.dims.x, x.dims.y, x.dims.z, x.yaw]
    };
    let (ka, kb) = (key(a), key(b));
    ka.iter()
        .zip(kb.iter())
        .map(|(p, q)| p.total_cmp(q))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Intersection over union of two yawed boxes.
///
/// Intersection volume is the area of the clipped bird's-eye footprints
/// times the vertical overlap. The result is bit-for-bit symmetric in its
/// arguments and lies in `[0, 1]`.
pub fn iou_3d(a: &Box3D, b: &Box3D) -> f64 {
    // Fix the clip order so floating point rounding cannot break symmetry.
    let (a, b) = if box_order(a, b) == Ordering::Greater { (b, a) } else { (a, b) };
    // Clipping a rotated polygon against itself leaves rounding residue.
    if a.center == b.center && a.dims == b.dims && a.yaw == b.yaw {
        return 1.0;
    }
    let dz = a.top().min(b.top()) - a.bottom().max(b.bottom());
    if dz <= 0.0 {
        return 0.0;
    }
    let area = polygon_area(&clip_convex(&bev_polygon(a), &bev_polygon(b)));
    if area == 0.0 {
        return 0.0;
    }
    let inter = area * dz;
    let union = a.volume() + b.volume() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}
