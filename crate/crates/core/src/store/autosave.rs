use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use super::AnnotationStore;
use crate::dataset::{save_annotations, DatasetError};

pub const DEFAULT_AUTOSAVE_INTERVAL: Duration = Duration::from_secs(5);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AutosaveOutcome {
    Saved,
    Skipped,
}

/// Debounced persistence of a store to its annotation file.
#[derive(Debug, Clone)]
pub struct Autosave {
    path: PathBuf,
    interval: Duration,
    last_save: Instant,
}

impl Autosave {
    /// `now` starts the first debounce window.
    pub fn new(path: impl Into<PathBuf>, interval: Duration, now: Instant) -> Self {
        Self {
            path: path.into(),
            interval,
            last_save: now,
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Saves when the store is dirty and at least one interval has passed
    /// since the last save. On failure the store stays dirty.
    pub fn tick(&mut self, store: &mut AnnotationStore, now: Instant) -> Result<AutosaveOutcome, DatasetError> {
        if !store.is_dirty() || now.saturating_duration_since(self.last_save) < self.interval {
            return Ok(AutosaveOutcome::Skipped);
        }
        self.flush(store, now)?;
        Ok(AutosaveOutcome::Saved)
    }

    /// Saves unconditionally.
    pub fn flush(&mut self, store: &mut AnnotationStore, now: Instant) -> Result<(), DatasetError> {
        save_annotations(&store.to_annotation_file(), &self.path)?;
        store.mark_saved();
        self.last_save = now;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::load_annotations;
    use crate::geometry::{Box3D, ClassLabel, Vec3};

    fn dirty_store() -> AnnotationStore {
        let mut s = AnnotationStore::new("seq", 4);
        let b = Box3D::new(Vec3::new(1.0, 2.0, 0.0), Vec3::new(4.0, 2.0, 1.5), 0.3, ClassLabel::Car, 0).unwrap();
        s.create_annotation(1, b).unwrap();
        s
    }

    #[test]
    fn clean_store_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let t0 = Instant::now();
        let mut a = Autosave::new(dir.path().join("a.json"), DEFAULT_AUTOSAVE_INTERVAL, t0);
        let mut s = AnnotationStore::new("seq", 4);
        assert_eq!(a.tick(&mut s, t0 + Duration::from_secs(60)).unwrap(), AutosaveOutcome::Skipped);
    }

    #[test]
    fn debounce_window() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.json");
        let t0 = Instant::now();
        let mut a = Autosave::new(&path, DEFAULT_AUTOSAVE_INTERVAL, t0);
        let mut s = dirty_store();
        assert_eq!(a.tick(&mut s, t0 + Duration::from_secs(1)).unwrap(), AutosaveOutcome::Skipped);
        assert!(s.is_dirty());
        assert_eq!(a.tick(&mut s, t0 + Duration::from_secs(6)).unwrap(), AutosaveOutcome::Saved);
        assert!(!s.is_dirty());
        assert_eq!(load_annotations(&path).unwrap(), s.to_annotation_file());
    }

    #[test]
    fn failure_keeps_state() {
        let t0 = Instant::now();
        let mut a = Autosave::new("/nonexistent-dir/x/a.json", DEFAULT_AUTOSAVE_INTERVAL, t0);
        let mut s = dirty_store();
        let before = s.snapshot();
        assert!(a.tick(&mut s, t0 + Duration::from_secs(6)).is_err());
        assert!(s.is_dirty());
        assert_eq!(s.snapshot(), before);
    }
}
