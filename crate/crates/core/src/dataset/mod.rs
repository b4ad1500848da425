//! Reading sequences from disk and the annotation interchange format.
//!
//! Three file kinds are handled here:
//!
//! - the sequence manifest (`manifest.json`), see [`load_manifest`];
//! - LiDAR point clouds, little-endian `f32 × 4` records or a whitespace
//!   separated ASCII list, see [`load_point_cloud`];
//! - annotation documents, one per sequence, see [`save_annotations`] and
//!   [`load_annotations`]. Flat CSV box tables can be imported with
//!   [`import_ground_truth`].
//!
//! Camera images are opaque bytes to this crate and never decoded.

mod annotations;
mod manifest;
mod pointcloud;

use std::path::PathBuf;

use thiserror::Error;

pub use annotations::{
    import_ground_truth, load_annotations, save_annotations, AnnotationDoc, AnnotationFile, AnnotationRecord,
    GtSchema, FORMAT_VERSION,
};
pub use manifest::{load_manifest, parse_manifest, FrameRecord, ManifestDoc, SequenceManifest};
pub use pointcloud::{encode_bin, load_point_cloud, parse_point_cloud, write_point_cloud, LidarPoint};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed document: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("invariant violated at `{field}`: {reason}")]
    Invariant { field: String, reason: String },
    #[error("truncated point cloud: {len} bytes is not a multiple of 16")]
    Truncated { len: usize },
    #[error("point {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("unsupported annotation format_version {0}")]
    UnsupportedVersion(u32),
    #[error("schema violation at `{field}`: {reason}")]
    Schema { field: String, reason: String },
    #[error("unknown ground-truth schema `{0}` (expected `native` or `external-boxes`)")]
    UnknownSchema(String),
    #[error("row {row}: {message}")]
    Row { row: u64, message: String },
}

impl DatasetError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DatasetError::Io {
            path: path.into(),
            source,
        }
    }

    /// The offending field for invariant and schema errors.
    pub fn field(&self) -> Option<&str> {
        match self {
            DatasetError::Invariant { field, .. } | DatasetError::Schema { field, .. } => Some(field),
            _ => None,
        }
    }
}
