//! Annotation toolkit for 3D bounding boxes with track IDs on full-surround
//! LiDAR + multi-camera driving sequences.
//!
//! The crate is organised by subsystem:
//!
//! - [`geometry`]: box math, pinhole projection, keyframe interpolation,
//!   rotated-box 3D IoU and RANSAC ground detection. Pure functions only.
//! - [`dataset`]: sequence manifests, point clouds and the annotation
//!   interchange document.
//! - [`store`]: the authoritative, undoable annotation state of one sequence,
//!   plus debounced autosave.
//! - [`evaluation`]: matching against reference annotations and
//!   precision / recall / F1 / IoU reporting.
//! - [`server`]: the HTTP service consumed by the browser annotator.
//! - [`cli`]: headless entry points wrapping all of the above.
//! - [`synth`]: synthetic rigs and sequences for demos and tests.

pub mod cli;
pub mod dataset;
pub mod evaluation;
pub mod geometry;
pub mod server;
pub mod store;
pub mod synth;

pub use dataset::{AnnotationFile, SequenceManifest};
pub use evaluation::MetricsReport;
pub use geometry::{Box3D, CameraModel, ClassLabel, Plane, ProjectedBox, Vec3};
pub use store::AnnotationStore;
