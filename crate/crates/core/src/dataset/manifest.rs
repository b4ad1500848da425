use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::geometry::{CameraDoc, CameraModel, GeometryError};

/// One LiDAR sweep plus the synchronised image of every camera.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub index: u32,
    /// Microseconds since the epoch. Stored, not used for interpolation.
    pub timestamp: u64,
    /// Relative to the manifest directory.
    pub pointcloud: String,
    /// Camera name to relative image path.
    pub images: BTreeMap<String, String>,
}

/// Wire form of a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestDoc {
    pub sequence_id: String,
    pub frames: Vec<FrameRecord>,
    pub cameras: Vec<CameraDoc>,
}

/// A validated sequence index.
///
/// Frames are numbered `0..frame_count` in order, and each frame names an
/// image for every declared camera.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceManifest {
    pub sequence_id: String,
    pub frames: Vec<FrameRecord>,
    pub cameras: Vec<CameraModel>,
    /// Directory the relative paths resolve against.
    pub root: PathBuf,
}

impl SequenceManifest {
    pub fn frame_count(&self) -> u32 {
        self.frames.len() as u32
    }

    pub fn camera(&self, name: &str) -> Option<&CameraModel> {
        self.cameras.iter().find(|c| c.name() == name)
    }

    pub fn resolve(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn pointcloud_path(&self, frame: u32) -> Option<PathBuf> {
        self.frames.get(frame as usize).map(|f| self.resolve(&f.pointcloud))
    }

    pub fn image_path(&self, frame: u32, camera: &str) -> Option<PathBuf> {
        self.frames
            .get(frame as usize)
            .and_then(|f| f.images.get(camera))
            .map(|p| self.resolve(p))
    }

    pub fn to_doc(&self) -> ManifestDoc {
        ManifestDoc {
            sequence_id: self.sequence_id.clone(),
            frames: self.frames.clone(),
            cameras: self.cameras.iter().cloned().map(CameraDoc::from).collect(),
        }
    }

    pub fn from_doc(doc: ManifestDoc, root: PathBuf) -> Result<Self, DatasetError> {
        let inv = |field: String, reason: String| DatasetError::Invariant { field, reason };
        if doc.sequence_id.is_empty() {
            return Err(inv("sequence_id".into(), "must not be empty".into()));
        }
        if doc.frames.is_empty() {
            return Err(inv("frames".into(), "a sequence needs at least one frame".into()));
        }

        let mut cameras = Vec::with_capacity(doc.cameras.len());
        let mut names = BTreeSet::new();
        for (i, c) in doc.cameras.into_iter().enumerate() {
            if !names.insert(c.name.clone()) {
                return Err(inv(format!("cameras[{i}].name"), format!("duplicate camera `{}`", c.name)));
            }
            let cam = CameraModel::try_from(c).map_err(|e| match e {
                GeometryError::InvalidCamera { camera, reason } => {
                    let (field, detail) = reason.split_once(':').unwrap_or(("", reason.as_str()));
                    inv(format!("cameras[{i}].{field}"), format!("camera `{camera}`:{detail}"))
                }
                other => inv(format!("cameras[{i}]"), other.to_string()),
            })?;
            cameras.push(cam);
        }

        for (i, f) in doc.frames.iter().enumerate() {
            if f.index as usize != i {
                return Err(inv(
                    format!("frames[{i}].index"),
                    format!("expected {i}, got {} (frames must be 0-based and strictly ordered)", f.index),
                ));
            }
            if f.pointcloud.is_empty() {
                return Err(inv(format!("frames[{i}].pointcloud"), "empty path".into()));
            }
            for name in &names {
                match f.images.get(name) {
                    None => {
                        return Err(inv(format!("frames[{i}].images.{name}"), "missing image for camera".into()))
                    }
                    Some(p) if p.is_empty() => {
                        return Err(inv(format!("frames[{i}].images.{name}"), "empty path".into()))
                    }
                    Some(_) => {}
                }
            }
            if let Some(extra) = f.images.keys().find(|k| !names.contains(*k)) {
                return Err(inv(format!("frames[{i}].images.{extra}"), "camera not declared".into()));
            }
        }

        Ok(Self {
            sequence_id: doc.sequence_id,
            frames: doc.frames,
            cameras,
            root,
        })
    }
}

/// Parses and validates manifest text. Relative paths resolve against `root`.
pub fn parse_manifest(text: &str, root: PathBuf, origin: &Path) -> Result<SequenceManifest, DatasetError> {
    let doc: ManifestDoc = serde_json::from_str(text).map_err(|e| DatasetError::Malformed {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })?;
    SequenceManifest::from_doc(doc, root)
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<SequenceManifest, DatasetError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_manifest(&text, root, path)
}
