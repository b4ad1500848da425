use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use serde_json::json;

use crate::dataset::DatasetError;
use crate::evaluation::EvalError;
use crate::geometry::GeometryError;
use crate::store::StoreError;

/// An error response: `{"error": {"code": ..., "message": ...}}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn not_found(what: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", what)
    }

    pub fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "code": self.code, "message": self.message } });
        (
            self.status,
            [(header::CONTENT_TYPE, "application/json")],
            format!("{body}\n"),
        )
            .into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let code = match &e {
            StoreError::FrameOutOfRange { .. } => "frame_out_of_range",
            StoreError::MissingAnnotation { .. } => return ApiError::not_found(e.to_string()),
            StoreError::UnknownTrack(_) => return ApiError::not_found(e.to_string()),
            StoreError::MissingKeyframe { .. } => "missing_keyframe",
            StoreError::ClassMismatch { .. } => "class_mismatch",
            StoreError::DuplicateTrack { .. } => "duplicate_track",
            StoreError::Geometry(GeometryError::Ordering { .. }) => "ordering",
            StoreError::Geometry(_) => "invalid_box",
        };
        ApiError::bad_request(code, e.to_string())
    }
}

impl From<DatasetError> for ApiError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io { .. } => ApiError::new(StatusCode::BAD_REQUEST, "io", e.to_string()),
            _ => ApiError::bad_request("invalid_document", e.to_string()),
        }
    }
}

impl From<EvalError> for ApiError {
    fn from(e: EvalError) -> Self {
        let code = match &e {
            EvalError::SequenceMismatch { .. } => "sequence_mismatch",
            EvalError::InvalidThreshold(_) => "invalid_threshold",
            EvalError::Dataset(_) => "import_failed",
            EvalError::Io(_) | EvalError::Csv(_) => "io",
        };
        ApiError::bad_request(code, e.to_string())
    }
}
