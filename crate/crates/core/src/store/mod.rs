//! Authoritative annotation state of one sequence.
//!
//! Every mutation is recorded as an [`EditOp`] carrying full before/after
//! snapshots of the touched `(frame, track)` slots, so undo and redo need no
//! outside context. Track IDs come from a monotonic counter and are never
//! reused, not even after undoing the create that consumed them.
//!
//! The store itself is single-writer; the server wraps it in a lock.

mod autosave;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::dataset::AnnotationFile;
use crate::geometry::{interpolate_track, wrap_angle, Box3D, ClassLabel, GeometryError, Vec3, MIN_DIM};

pub use autosave::{Autosave, AutosaveOutcome, DEFAULT_AUTOSAVE_INTERVAL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StoreError {
    #[error("frame {frame} out of range (sequence has {frame_count} frames)")]
    FrameOutOfRange { frame: u32, frame_count: u32 },
    #[error("no annotation for track {track_id} on frame {frame}")]
    MissingAnnotation { frame: u32, track_id: u64 },
    #[error("unknown track {0}")]
    UnknownTrack(u64),
    #[error("frame {frame} is not a keyframe of track {track_id}")]
    MissingKeyframe { frame: u32, track_id: u64 },
    #[error("track {track_id} is {expected}, got {got}")]
    ClassMismatch {
        track_id: u64,
        expected: ClassLabel,
        got: ClassLabel,
    },
    #[error("track {track_id} appears more than once on frame {frame}")]
    DuplicateTrack { frame: u32, track_id: u64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EditKind {
    Create,
    Delete,
    SetPose,
    SetDims,
    SetYaw,
    SetClass,
    InterpolateRange,
    MarkKeyframe,
    ReplaceFrame,
}

/// One `(frame, track)` slot as it was or will be.
#[derive(Debug, Clone, PartialEq)]
pub struct Slot {
    pub frame: u32,
    pub value: Box3D,
    pub keyframe: bool,
}

/// A reversible edit.
///
/// Applying removes every slot in `before` and then writes every slot in
/// `after`; reverting does the opposite.
#[derive(Debug, Clone, PartialEq)]
pub struct EditOp {
    pub kind: EditKind,
    pub frame: u32,
    pub track_id: u64,
    pub before: Vec<Slot>,
    pub after: Vec<Slot>,
}

/// A change to one annotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delta {
    Translate(Vec3),
    SetCenter(Vec3),
    /// Added to the current dims.
    Resize(Vec3),
    SetDims(Vec3),
    /// Added to the current yaw, then wrapped.
    Rotate(f64),
    SetYaw(f64),
    /// Relabels the whole track.
    SetClass(ClassLabel),
}

/// The undo-independent part of the store state.
#[derive(Debug, Clone, PartialEq)]
pub struct StoreSnapshot {
    pub annotations: BTreeMap<(u32, u64), Box3D>,
    pub keyframes: BTreeMap<u64, BTreeSet<u32>>,
}

#[derive(Debug, Clone)]
pub struct AnnotationStore {
    sequence_id: String,
    frame_count: u32,
    annotations: BTreeMap<(u32, u64), Box3D>,
    keyframes: BTreeMap<u64, BTreeSet<u32>>,
    next_track_id: u64,
    undo_stack: Vec<EditOp>,
    redo_stack: Vec<EditOp>,
    dirty: bool,
}

fn clamp_dims(d: Vec3) -> Vec3 {
    Vec3::new(d.x.max(MIN_DIM), d.y.max(MIN_DIM), d.z.max(MIN_DIM))
}

impl AnnotationStore {
    pub fn new(sequence_id: impl Into<String>, frame_count: u32) -> Self {
        Self {
            sequence_id: sequence_id.into(),
            frame_count,
            annotations: BTreeMap::new(),
            keyframes: BTreeMap::new(),
            next_track_id: 0,
            undo_stack: Vec::new(),
            redo_stack: Vec::new(),
            dirty: false,
        }
    }

    /// Seeds a store from a saved file. Nothing is marked as a keyframe and
    /// the history starts empty.
    pub fn from_annotation_file(file: &AnnotationFile, frame_count: u32) -> Result<Self, StoreError> {
        let mut s = Self::new(file.sequence_id.clone(), frame_count);
        let mut classes = BTreeMap::new();
        for (frame, b) in file.boxes() {
            s.check_frame(frame)?;
            b.validate()?;
            if let Some(&expected) = classes.get(&b.track_id) {
                if expected != b.class_label {
                    return Err(StoreError::ClassMismatch {
                        track_id: b.track_id,
                        expected,
                        got: b.class_label,
                    });
                }
            }
            classes.insert(b.track_id, b.class_label);
            if s.annotations.insert((frame, b.track_id), *b).is_some() {
                return Err(StoreError::DuplicateTrack {
                    frame,
                    track_id: b.track_id,
                });
            }
            s.next_track_id = s.next_track_id.max(b.track_id + 1);
        }
        Ok(s)
    }

    pub fn sequence_id(&self) -> &str {
        &self.sequence_id
    }

    pub fn frame_count(&self) -> u32 {
        self.frame_count
    }

    pub fn next_track_id(&self) -> u64 {
        self.next_track_id
    }

    pub fn is_dirty(&self) -> bool {
        self.dirty
    }

    pub fn mark_saved(&mut self) {
        self.dirty = false;
    }

    pub fn undo_depth(&self) -> usize {
        self.undo_stack.len()
    }

    pub fn redo_depth(&self) -> usize {
        self.redo_stack.len()
    }

    pub fn get(&self, frame: u32, track_id: u64) -> Option<&Box3D> {
        self.annotations.get(&(frame, track_id))
    }

    /// Boxes on `frame`, ordered by track ID.
    pub fn frame_boxes(&self, frame: u32) -> Vec<Box3D> {
        self.annotations
            .range((frame, 0)..=(frame, u64::MAX))
            .map(|(_, b)| *b)
            .collect()
    }

    pub fn keyframes(&self, track_id: u64) -> Option<&BTreeSet<u32>> {
        self.keyframes.get(&track_id)
    }

    pub fn is_keyframe(&self, frame: u32, track_id: u64) -> bool {
        self.keyframes.get(&track_id).is_some_and(|k| k.contains(&frame))
    }

    pub fn snapshot(&self) -> StoreSnapshot {
        StoreSnapshot {
            annotations: self.annotations.clone(),
            keyframes: self.keyframes.clone(),
        }
    }

    /// All boxes in canonical order: by frame, then track ID.
    pub fn to_annotation_file(&self) -> AnnotationFile {
        let mut f = AnnotationFile::new(self.sequence_id.clone());
        for ((frame, _), b) in &self.annotations {
            f.push(*frame, *b);
        }
        f
    }

    fn check_frame(&self, frame: u32) -> Result<(), StoreError> {
        if frame >= self.frame_count {
            return Err(StoreError::FrameOutOfRange {
                frame,
                frame_count: self.frame_count,
            });
        }
        Ok(())
    }

    fn track_class(&self, track_id: u64) -> Option<ClassLabel> {
        self.annotations
            .iter()
            .find(|((_, t), _)| *t == track_id)
            .map(|(_, b)| b.class_label)
    }

    fn track_slots(&self, track_id: u64) -> Vec<Slot> {
        self.annotations
            .iter()
            .filter(|((_, t), _)| *t == track_id)
            .map(|((f, _), b)| self.slot(*f, b))
            .collect()
    }

    fn slot(&self, frame: u32, b: &Box3D) -> Slot {
        Slot {
            frame,
            value: *b,
            keyframe: self.is_keyframe(frame, b.track_id),
        }
    }

    fn existing(&self, frame: u32, track_id: u64) -> Result<Slot, StoreError> {
        self.get(frame, track_id)
            .map(|b| self.slot(frame, b))
            .ok_or(StoreError::MissingAnnotation { frame, track_id })
    }

    fn remove_slot(&mut self, s: &Slot) {
        let t = s.value.track_id;
        self.annotations.remove(&(s.frame, t));
        if let Some(k) = self.keyframes.get_mut(&t) {
            k.remove(&s.frame);
            if k.is_empty() {
                self.keyframes.remove(&t);
            }
        }
    }

    fn write_slot(&mut self, s: &Slot) {
        let t = s.value.track_id;
        self.annotations.insert((s.frame, t), s.value);
        if s.keyframe {
            self.keyframes.entry(t).or_default().insert(s.frame);
        }
    }

    fn apply(&mut self, remove: &[Slot], write: &[Slot]) {
        for s in remove {
            self.remove_slot(s);
        }
        for s in write {
            self.write_slot(s);
        }
        self.dirty = true;
    }

    fn commit(&mut self, op: EditOp) {
        self.apply(&op.before, &op.after);
        self.undo_stack.push(op);
        self.redo_stack.clear();
    }

    /// Adds a new track with one keyframe box on `frame` and returns its ID.
    /// The template's `track_id` is ignored.
    pub fn create_annotation(&mut self, frame: u32, template: Box3D) -> Result<u64, StoreError> {
        self.check_frame(frame)?;
        let track_id = self.next_track_id;
        let value = Box3D {
            track_id,
            dims: clamp_dims(template.dims),
            yaw: wrap_angle(template.yaw),
            ..template
        };
        value.validate()?;
        self.next_track_id += 1;
        self.commit(EditOp {
            kind: EditKind::Create,
            frame,
            track_id,
            before: vec![],
            after: vec![Slot {
                frame,
                value,
                keyframe: true,
            }],
        });
        Ok(track_id)
    }

    /// Puts a keyframe box for an existing track on `frame`, replacing any
    /// box already there.
    pub fn place_keyframe(&mut self, frame: u32, track_id: u64, template: Box3D) -> Result<(), StoreError> {
        self.check_frame(frame)?;
        let expected = self.track_class(track_id).ok_or(StoreError::UnknownTrack(track_id))?;
        if template.class_label != expected {
            return Err(StoreError::ClassMismatch {
                track_id,
                expected,
                got: template.class_label,
            });
        }
        let value = Box3D {
            track_id,
            dims: clamp_dims(template.dims),
            yaw: wrap_angle(template.yaw),
            ..template
        };
        value.validate()?;
        let before = self.existing(frame, track_id).into_iter().collect();
        self.commit(EditOp {
            kind: EditKind::Create,
            frame,
            track_id,
            before,
            after: vec![Slot {
                frame,
                value,
                keyframe: true,
            }],
        });
        Ok(())
    }

    /// Applies `delta` to one annotation. Keyframe status is unchanged;
    /// use [`mark_keyframe`](Self::mark_keyframe) to promote an edited
    /// interpolated box.
    pub fn edit_annotation(&mut self, frame: u32, track_id: u64, delta: Delta) -> Result<(), StoreError> {
        let before = self.existing(frame, track_id)?;
        if let Delta::SetClass(class) = delta {
            let before = self.track_slots(track_id);
            let after = before
                .iter()
                .map(|s| Slot {
                    value: Box3D {
                        class_label: class,
                        ..s.value
                    },
                    ..s.clone()
                })
                .collect();
            self.commit(EditOp {
                kind: EditKind::SetClass,
                frame,
                track_id,
                before,
                after,
            });
            return Ok(());
        }

        let mut value = before.value;
        let kind = match delta {
            Delta::Translate(d) => {
                value.center = value.center + d;
                EditKind::SetPose
            }
            Delta::SetCenter(c) => {
                value.center = c;
                EditKind::SetPose
            }
            Delta::Resize(d) => {
                value.dims = clamp_dims(value.dims + d);
                EditKind::SetDims
            }
            Delta::SetDims(d) => {
                value.dims = clamp_dims(d);
                EditKind::SetDims
            }
            Delta::Rotate(a) => {
                value.yaw = wrap_angle(value.yaw + a);
                EditKind::SetYaw
            }
            Delta::SetYaw(a) => {
                value.yaw = wrap_angle(a);
                EditKind::SetYaw
            }
            Delta::SetClass(_) => unreachable!(),
        };
        value.validate()?;
        let after = Slot {
            value,
            ..before.clone()
        };
        self.commit(EditOp {
            kind,
            frame,
            track_id,
            before: vec![before],
            after: vec![after],
        });
        Ok(())
    }

    /// Marks or unmarks an existing annotation as an interpolation control
    /// point.
    pub fn mark_keyframe(&mut self, frame: u32, track_id: u64, keyframe: bool) -> Result<(), StoreError> {
        let before = self.existing(frame, track_id)?;
        let after = Slot {
            keyframe,
            ..before.clone()
        };
        self.commit(EditOp {
            kind: EditKind::MarkKeyframe,
            frame,
            track_id,
            before: vec![before],
            after: vec![after],
        });
        Ok(())
    }

    pub fn delete_annotation(&mut self, frame: u32, track_id: u64) -> Result<(), StoreError> {
        let before = self.existing(frame, track_id)?;
        self.commit(EditOp {
            kind: EditKind::Delete,
            frame,
            track_id,
            before: vec![before],
            after: vec![],
        });
        Ok(())
    }

    /// Removes every box of a track as one undoable step.
    pub fn delete_track(&mut self, track_id: u64) -> Result<usize, StoreError> {
        let before = self.track_slots(track_id);
        if before.is_empty() {
            return Err(StoreError::UnknownTrack(track_id));
        }
        let n = before.len();
        self.commit(EditOp {
            kind: EditKind::Delete,
            frame: before[0].frame,
            track_id,
            before,
            after: vec![],
        });
        Ok(n)
    }

    /// Fills every non-keyframe frame between two keyframes of a track.
    ///
    /// Keyframes strictly inside the range split it into independent linear
    /// segments and are never modified. Previously interpolated boxes are
    /// overwritten. The whole fill is one undo step. Returns the number of
    /// boxes written.
    pub fn interpolate_range(&mut self, track_id: u64, start: u32, end: u32) -> Result<usize, StoreError> {
        if start >= end {
            return Err(GeometryError::Ordering { start, end }.into());
        }
        for f in [start, end] {
            if !self.is_keyframe(f, track_id) {
                return Err(StoreError::MissingKeyframe { frame: f, track_id });
            }
        }
        let controls: Vec<u32> = self.keyframes[&track_id].range(start..=end).copied().collect();
        let mut after = Vec::new();
        for pair in controls.windows(2) {
            let (f0, f1) = (pair[0], pair[1]);
            let b0 = self.annotations[&(f0, track_id)];
            let b1 = self.annotations[&(f1, track_id)];
            for (frame, value) in interpolate_track((f0, &b0), (f1, &b1))? {
                after.push(Slot {
                    frame,
                    value,
                    keyframe: false,
                });
            }
        }
        let before: Vec<Slot> = after
            .iter()
            .filter_map(|s| self.get(s.frame, track_id).map(|b| self.slot(s.frame, b)))
            .collect();
        let written = after.len();
        if written > 0 {
            self.commit(EditOp {
                kind: EditKind::InterpolateRange,
                frame: start,
                track_id,
                before,
                after,
            });
        }
        Ok(written)
    }

    /// Replaces the full set of boxes on `frame`.
    ///
    /// Tracks new to the frame become keyframes there; tracks already present
    /// keep their keyframe flag. A track ID at or above the counter advances
    /// it. Each track must keep the class it has on other frames.
    pub fn replace_frame(&mut self, frame: u32, boxes: Vec<Box3D>) -> Result<(), StoreError> {
        self.check_frame(frame)?;
        let mut seen = BTreeSet::new();
        for b in &boxes {
            b.validate()?;
            if !seen.insert(b.track_id) {
                return Err(StoreError::DuplicateTrack {
                    frame,
                    track_id: b.track_id,
                });
            }
            let other = self
                .annotations
                .iter()
                .find(|((f, t), _)| *t == b.track_id && *f != frame)
                .map(|(_, o)| o.class_label);
            if let Some(expected) = other {
                if expected != b.class_label {
                    return Err(StoreError::ClassMismatch {
                        track_id: b.track_id,
                        expected,
                        got: b.class_label,
                    });
                }
            }
        }
        let before: Vec<Slot> = self
            .annotations
            .range((frame, 0)..=(frame, u64::MAX))
            .map(|(_, b)| self.slot(frame, b))
            .collect();
        let after: Vec<Slot> = boxes
            .iter()
            .map(|b| Slot {
                frame,
                value: *b,
                keyframe: before
                    .iter()
                    .find(|s| s.value.track_id == b.track_id)
                    .map_or(true, |s| s.keyframe),
            })
            .collect();
        if let Some(max) = boxes.iter().map(|b| b.track_id).max() {
            self.next_track_id = self.next_track_id.max(max + 1);
        }
        self.commit(EditOp {
            kind: EditKind::ReplaceFrame,
            frame,
            track_id: boxes.first().map_or(0, |b| b.track_id),
            before,
            after,
        });
        Ok(())
    }

    /// Reverts the latest edit. `None` when there is nothing to undo.
    pub fn undo(&mut self) -> Option<EditOp> {
        let op = self.undo_stack.pop()?;
        self.apply(&op.after, &op.before);
        self.redo_stack.push(op.clone());
        Some(op)
    }

    /// Re-applies the latest undone edit. `None` when there is nothing to redo.
    pub fn redo(&mut self) -> Option<EditOp> {
        let op = self.redo_stack.pop()?;
        self.apply(&op.before, &op.after);
        self.undo_stack.push(op.clone());
        Some(op)
    }
}
