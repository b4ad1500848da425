use std::path::Path;

use super::DatasetError;
use crate::geometry::Vec3;

const RECORD_BYTES: usize = 16;
const ASCII_HEADER: &str = "x y z intensity";

/// One LiDAR return.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarPoint {
    pub position: Vec3,
    pub intensity: f32,
}

/// Decodes a point cloud.
///
/// Input starting with the line `x y z intensity` is read as ASCII, one point
/// per line; anything else as packed little-endian `[x, y, z, intensity]`
/// `f32` records.
pub fn parse_point_cloud(bytes: &[u8]) -> Result<Vec<LidarPoint>, DatasetError> {
    if bytes.starts_with(ASCII_HEADER.as_bytes()) {
        return parse_ascii(bytes);
    }
    if bytes.len() % RECORD_BYTES != 0 {
        return Err(DatasetError::Truncated { len: bytes.len() });
    }
    bytes
        .chunks_exact(RECORD_BYTES)
        .enumerate()
        .map(|(index, rec)| {
            let f = |k: usize| f32::from_le_bytes(rec[4 * k..4 * k + 4].try_into().unwrap());
            let (x, y, z) = (f(0), f(1), f(2));
            if !(x.is_finite() && y.is_finite() && z.is_finite()) {
                return Err(DatasetError::NonFinite { index });
            }
            Ok(LidarPoint {
                position: Vec3::new(x.into(), y.into(), z.into()),
                intensity: f(3),
            })
        })
        .collect()
}

fn parse_ascii(bytes: &[u8]) -> Result<Vec<LidarPoint>, DatasetError> {
    let text = std::str::from_utf8(bytes).map_err(|e| DatasetError::Row {
        row: 0,
        message: e.to_string(),
    })?;
    let mut out = Vec::new();
    for (line_no, line) in text.lines().enumerate().skip(1) {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line_no as u64 + 1;
        let vals: Vec<f32> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| DatasetError::Row {
                row,
                message: format!("{e}"),
            })?;
        if vals.len() != 4 {
            return Err(DatasetError::Row {
                row,
                message: format!("expected 4 values, got {}", vals.len()),
            });
        }
        if !vals[..3].iter().all(|v| v.is_finite()) {
            return Err(DatasetError::NonFinite { index: out.len() });
        }
        out.push(LidarPoint {
            position: Vec3::new(vals[0].into(), vals[1].into(), vals[2].into()),
            intensity: vals[3],
        });
    }
    Ok(out)
}

pub fn load_point_cloud(path: impl AsRef<Path>) -> Result<Vec<LidarPoint>, DatasetError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| DatasetError::io(path, e))?;
    parse_point_cloud(&bytes)
}

/// Packs points as little-endian `f32 × 4` records.
///
/// Positions are narrowed to `f32`; clouds decoded by [`parse_point_cloud`]
/// re-encode to the original bytes.
pub fn encode_bin(points: &[LidarPoint]) -> Vec<u8> {
    let mut out = Vec::with_capacity(points.len() * RECORD_BYTES);
    for p in points {
        for v in [p.position.x as f32, p.position.y as f32, p.position.z as f32, p.intensity] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn write_point_cloud(path: impl AsRef<Path>, points: &[LidarPoint]) -> Result<(), DatasetError> {
    let path = path.as_ref();
    std::fs::write(path, encode_bin(points)).map_err(|e| DatasetError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bin(vals: &[f32]) -> Vec<u8> {
        vals.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    #[test]
    fn sizes() {
        let two = bin(&[1.0, 2.0, 3.0, 0.5, -1.0, -2.0, -3.0, 0.25]);
        assert_eq!(two.len(), 32);
        let pts = parse_point_cloud(&two).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[1].position, Vec3::new(-1.0, -2.0, -3.0));
        assert_eq!(pts[1].intensity, 0.25);

        let mut bad = two.clone();
        bad.push(0);
        assert!(matches!(parse_point_cloud(&bad), Err(DatasetError::Truncated { len: 33 })));
        assert!(parse_point_cloud(&[]).unwrap().is_empty());
    }

    #[test]
    fn non_finite_reports_index() {
        let b = bin(&[0.0, 0.0, 0.0, 0.0, 1.0, f32::NAN, 0.0, 0.0]);
        assert!(matches!(parse_point_cloud(&b), Err(DatasetError::NonFinite { index: 1 })));
    }

    #[test]
    fn ascii_fallback() {
        let text = "x y z intensity\n1 2 3 0.5\n\n-1.5 0 2 1\n";
        let pts = parse_point_cloud(text.as_bytes()).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0].position, Vec3::new(1.0, 2.0, 3.0));
        let e = parse_point_cloud(b"x y z intensity\n1 2 3\n").unwrap_err();
        assert!(matches!(e, DatasetError::Row { row: 2, .. }));
    }

    proptest! {
        #[test]
        fn binary_reencode_is_identity(vals in prop::collection::vec(-1.0e4f32..1.0e4, 0..64)) {
            let n = vals.len() / 4 * 4;
            let bytes = bin(&vals[..n]);
            let pts = parse_point_cloud(&bytes).unwrap();
            prop_assert_eq!(pts.len(), n / 4);
            prop_assert_eq!(encode_bin(&pts), bytes);
        }
    }
}
