use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::geometry::{wrap_angle, Box3D, ClassLabel, Vec3};

pub const FORMAT_VERSION: u32 = 1;

/// All boxes of one sequence, keyed by frame.
///
/// Within a frame, boxes keep their insertion order. Frames with no boxes
/// are not stored, so two files with the same boxes compare equal.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnnotationFile {
    pub sequence_id: String,
    frames: BTreeMap<u32, Vec<Box3D>>,
}

impl AnnotationFile {
    pub fn new(sequence_id: impl Into<String>) -> Self {
        Self {
            sequence_id: sequence_id.into(),
            frames: BTreeMap::new(),
        }
    }

    pub fn format_version(&self) -> u32 {
        FORMAT_VERSION
    }

    pub fn push(&mut self, frame: u32, b: Box3D) {
        self.frames.entry(frame).or_default().push(b);
    }

    /// Replaces the boxes of `frame`.
    pub fn set_frame(&mut self, frame: u32, boxes: Vec<Box3D>) {
        if boxes.is_empty() {
            self.frames.remove(&frame);
        } else {
            self.frames.insert(frame, boxes);
        }
    }

    pub fn frame(&self, frame: u32) -> &[Box3D] {
        self.frames.get(&frame).map_or(&[], Vec::as_slice)
    }

    /// Non-empty frames in ascending order.
    pub fn frames(&self) -> impl Iterator<Item = (u32, &[Box3D])> {
        self.frames.iter().map(|(f, b)| (*f, b.as_slice()))
    }

    pub fn boxes(&self) -> impl Iterator<Item = (u32, &Box3D)> {
        self.frames.iter().flat_map(|(f, bs)| bs.iter().map(move |b| (*f, b)))
    }

    pub fn len(&self) -> usize {
        self.frames.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn last_frame(&self) -> Option<u32> {
        self.frames.keys().next_back().copied()
    }

    /// Checks box validity, one box per track per frame, and a single class
    /// per track across frames.
    pub fn validate(&self) -> Result<(), DatasetError> {
        let mut classes: HashMap<u64, ClassLabel> = HashMap::new();
        for (frame, boxes) in &self.frames {
            let mut seen = std::collections::HashSet::new();
            for (k, b) in boxes.iter().enumerate() {
                let field = || format!("frame {frame}, box {k} (track {})", b.track_id);
                b.validate().map_err(|e| DatasetError::Schema {
                    field: field(),
                    reason: e.to_string(),
                })?;
                if !seen.insert(b.track_id) {
                    return Err(DatasetError::Schema {
                        field: field(),
                        reason: "track appears twice in one frame".into(),
                    });
                }
                let class = *classes.entry(b.track_id).or_insert(b.class_label);
                if class != b.class_label {
                    return Err(DatasetError::Schema {
                        field: field(),
                        reason: format!("track class {} conflicts with earlier {}", b.class_label, class),
                    });
                }
            }
        }
        Ok(())
    }

    /// Rejects frames at or beyond `frame_count`.
    pub fn check_frame_range(&self, frame_count: u32) -> Result<(), DatasetError> {
        match self.last_frame() {
            Some(f) if f >= frame_count => Err(DatasetError::Invariant {
                field: format!("annotations.frame {f}"),
                reason: format!("sequence has {frame_count} frames"),
            }),
            _ => Ok(()),
        }
    }

    pub fn to_doc(&self) -> AnnotationDoc {
        AnnotationDoc {
            format_version: FORMAT_VERSION,
            sequence_id: self.sequence_id.clone(),
            annotations: self.boxes().map(|(f, b)| AnnotationRecord::from_box(f, b)).collect(),
        }
    }

    pub fn from_doc(doc: AnnotationDoc) -> Result<Self, DatasetError> {
        if doc.format_version != FORMAT_VERSION {
            return Err(DatasetError::UnsupportedVersion(doc.format_version));
        }
        let mut out = AnnotationFile::new(doc.sequence_id);
        for (i, r) in doc.annotations.into_iter().enumerate() {
            let (frame, b) = r.into_box(i)?;
            out.push(frame, b);
        }
        out.validate()?;
        Ok(out)
    }

    /// Canonical document text: pretty JSON with a trailing newline. Floats
    /// are written in shortest round-trip form.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_doc()).expect("annotation doc serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        let doc: AnnotationDoc = serde_json::from_str(text).map_err(|e| DatasetError::Malformed {
            path: "<annotations>".into(),
            message: e.to_string(),
        })?;
        Self::from_doc(doc)
    }
}

/// Wire form of an annotation file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationDoc {
    pub format_version: u32,
    pub sequence_id: String,
    pub annotations: Vec<AnnotationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationRecord {
    pub frame: u32,
    pub track_id: u64,
    pub class: String,
    pub center: [f64; 3],
    pub dims: [f64; 3],
    pub yaw: f64,
}

impl AnnotationRecord {
    pub fn from_box(frame: u32, b: &Box3D) -> Self {
        Self {
            frame,
            track_id: b.track_id,
            class: b.class_label.as_str().to_owned(),
            center: b.center.into(),
            dims: b.dims.into(),
            yaw: b.yaw,
        }
    }

    /// `i` is the record position, used in error messages.
    pub fn into_box(self, i: usize) -> Result<(u32, Box3D), DatasetError> {
        let class = ClassLabel::from_str(&self.class).map_err(|e| DatasetError::Schema {
            field: format!("annotations[{i}].class"),
            reason: e.to_string(),
        })?;
        let b = Box3D::new(
            Vec3::from(self.center),
            Vec3::from(self.dims),
            self.yaw,
            class,
            self.track_id,
        )
        .map_err(|e| DatasetError::Schema {
            field: format!("annotations[{i}]"),
            reason: e.to_string(),
        })?;
        Ok((self.frame, b))
    }
}

/// Writes `file` atomically: the document goes to a temporary file in the
/// target directory which is then renamed over `path`.
pub fn save_annotations(file: &AnnotationFile, path: impl AsRef<Path>) -> Result<(), DatasetError> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| DatasetError::io(dir, e))?;
    tmp.write_all(file.to_json().as_bytes())
        .and_then(|_| tmp.as_file().sync_all())
        .map_err(|e| DatasetError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| DatasetError::io(path, e.error))?;
    Ok(())
}

pub fn load_annotations(path: impl AsRef<Path>) -> Result<AnnotationFile, DatasetError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
    let doc: AnnotationDoc = serde_json::from_str(&text).map_err(|e| DatasetError::Malformed {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    AnnotationFile::from_doc(doc)
}

/// Accepted reference-annotation layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GtSchema {
    /// The annotation document written by [`save_annotations`].
    Native,
    /// CSV with header `frame,class,cx,cy,cz,l,w,h,yaw,track`, one box per row.
    ExternalBoxes,
}

impl FromStr for GtSchema {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "native" => Ok(GtSchema::Native),
            "external-boxes" => Ok(GtSchema::ExternalBoxes),
            other => Err(DatasetError::UnknownSchema(other.to_owned())),
        }
    }
}

#[derive(Debug, Deserialize)]
struct ExternalRow {
    frame: u32,
    class: String,
    cx: f64,
    cy: f64,
    cz: f64,
    l: f64,
    w: f64,
    h: f64,
    yaw: f64,
    track: u64,
}

const EXTERNAL_HEADER: [&str; 10] = ["frame", "class", "cx", "cy", "cz", "l", "w", "h", "yaw", "track"];

/// Reads reference annotations. Rows of an external table take the file
/// stem as `sequence_id`; yaw is wrapped into `(-π, π]`.
pub fn import_ground_truth(path: impl AsRef<Path>, schema: GtSchema) -> Result<AnnotationFile, DatasetError> {
    let path = path.as_ref();
    match schema {
        GtSchema::Native => load_annotations(path),
        GtSchema::ExternalBoxes => {
            let text = std::fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            parse_external_boxes(&text, stem)
        }
    }
}

pub(crate) fn parse_external_boxes(text: &str, sequence_id: String) -> Result<AnnotationFile, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| DatasetError::Row {
        row: 1,
        message: e.to_string(),
    })?;
    if header.iter().ne(EXTERNAL_HEADER) {
        return Err(DatasetError::Row {
            row: 1,
            message: format!("expected header `{}`", EXTERNAL_HEADER.join(",")),
        });
    }
    let header = header.clone();
    let mut out = AnnotationFile::new(sequence_id);
    for rec in rdr.records() {
        let raw = rec.map_err(|e| DatasetError::Row {
            row: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let row = raw.position().map_or(0, |p| p.line());
        let row_err = |message: String| DatasetError::Row { row, message };
        let rec: ExternalRow = raw.deserialize(Some(&header)).map_err(|e| row_err(e.to_string()))?;
        let class = ClassLabel::from_str(&rec.class).map_err(|e| row_err(e.to_string()))?;
        let b = Box3D::new(
            Vec3::new(rec.cx, rec.cy, rec.cz),
            Vec3::new(rec.l, rec.w, rec.h),
            wrap_angle(rec.yaw),
            class,
            rec.track,
        )
        .map_err(|e| row_err(e.to_string()))?;
        out.push(rec.frame, b);
    }
    out.validate()?;
    Ok(out)
}
