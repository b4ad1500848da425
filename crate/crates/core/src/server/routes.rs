use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::services::ServeDir;

use super::{ApiError, AppState, Session};
use crate::dataset::{
    encode_bin, parse_point_cloud, AnnotationDoc, AnnotationRecord, GtSchema, FORMAT_VERSION,
};
use crate::evaluation::{evaluate_against_file, EvalOptions, DEFAULT_IOU_THRESHOLD};
use crate::geometry::{project_box, Box3D, ClassLabel, Vec3};
use crate::store::{AnnotationStore, EditOp};

type ApiResult<T = Response> = Result<T, ApiError>;

const INDEX_PLACEHOLDER: &str = "<!doctype html>\n<title>trackbox</title>\n<p>Annotation API at <code>/api/sequences</code>.</p>\n";

pub fn router(state: Arc<AppState>) -> Router {
    let api = Router::new()
        .route("/api/sequences", get(list_sequences))
        .route("/api/sequences/{id}/manifest", get(manifest))
        .route("/api/sequences/{id}/frames/{frame}/pointcloud", get(pointcloud))
        .route("/api/sequences/{id}/frames/{frame}/images/{camera}", get(image))
        .route(
            "/api/sequences/{id}/frames/{frame}/annotations",
            get(frame_annotations).put(put_frame).post(create_annotation),
        )
        .route("/api/sequences/{id}/frames/{frame}/tracks/{track}/keyframe", post(mark_keyframe))
        .route("/api/sequences/{id}/frames/{frame}/tracks/{track}/projections", get(projections))
        .route("/api/sequences/{id}/tracks/{track}/keyframes", get(keyframes))
        .route("/api/sequences/{id}/tracks/{track}/interpolate", post(interpolate))
        .route("/api/sequences/{id}/undo", post(undo))
        .route("/api/sequences/{id}/redo", post(redo))
        .route("/api/sequences/{id}/evaluate", post(evaluate))
        .route("/api/sequences/{id}/export", get(export))
        .fallback(|| async { ApiError::not_found("no such endpoint") });
    let app = match &state.static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(INDEX_PLACEHOLDER) })),
    };
    app.with_state(state)
}

fn session(state: &AppState, id: &str) -> ApiResult<Arc<Session>> {
    state
        .sessions
        .get(id)
        .cloned()
        .ok_or_else(|| ApiError::not_found(format!("unknown sequence `{id}`")))
}

/// Serializes with a trailing newline so identical states give identical bytes.
fn json_response<T: Serialize>(status: StatusCode, value: &T) -> Response {
    let mut body = serde_json::to_string_pretty(value).expect("response serializes");
    body.push('\n');
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn ok<T: Serialize>(value: &T) -> ApiResult {
    Ok(json_response(StatusCode::OK, value))
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ApiError::bad_request("invalid_body", e.body_text()))
}

fn check_frame(s: &Session, frame: u32) -> ApiResult<()> {
    if frame < s.manifest.frame_count() {
        Ok(())
    } else {
        Err(ApiError::not_found(format!(
            "frame {frame} out of range (sequence has {} frames)",
            s.manifest.frame_count()
        )))
    }
}

fn frame_doc(store: &AnnotationStore, frame: u32) -> AnnotationDoc {
    AnnotationDoc {
        format_version: FORMAT_VERSION,
        sequence_id: store.sequence_id().to_owned(),
        annotations: store
            .frame_boxes(frame)
            .iter()
            .map(|b| AnnotationRecord::from_box(frame, b))
            .collect(),
    }
}

#[derive(Serialize)]
struct SequenceSummary<'a> {
    sequence_id: &'a str,
    frame_count: u32,
    cameras: Vec<&'a str>,
}

async fn list_sequences(State(state): State<Arc<AppState>>) -> ApiResult {
    let list: Vec<SequenceSummary> = state
        .sessions
        .iter()
        .map(|(id, s)| SequenceSummary {
            sequence_id: id,
            frame_count: s.manifest.frame_count(),
            cameras: s.manifest.cameras.iter().map(|c| c.name()).collect(),
        })
        .collect();
    ok(&list)
}

async fn manifest(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    ok(&session(&state, &id)?.manifest.to_doc())
}

async fn read_file(path: PathBuf) -> ApiResult<Vec<u8>> {
    tokio::fs::read(&path)
        .await
        .map_err(|e| ApiError::not_found(format!("{}: {e}", path.display())))
}

async fn pointcloud(State(state): State<Arc<AppState>>, Path((id, frame)): Path<(String, u32)>) -> ApiResult {
    let s = session(&state, &id)?;
    check_frame(&s, frame)?;
    let path = s.manifest.pointcloud_path(frame).expect("frame checked");
    let raw = read_file(path).await?;
    // ASCII clouds are normalized so clients only ever parse one layout.
    let bytes = if raw.starts_with(b"x y z intensity") {
        let points = parse_point_cloud(&raw).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "bad_pointcloud", e.to_string()))?;
        encode_bin(&points)
    } else {
        raw
    };
    Ok(([(header::CONTENT_TYPE, "application/octet-stream")], Bytes::from(bytes)).into_response())
}

fn image_type(path: &std::path::Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("png") => "image/png",
        _ => "application/octet-stream",
    }
}

async fn image(
    State(state): State<Arc<AppState>>,
    Path((id, frame, camera)): Path<(String, u32, String)>,
) -> ApiResult {
    let s = session(&state, &id)?;
    check_frame(&s, frame)?;
    let path = s
        .manifest
        .image_path(frame, &camera)
        .ok_or_else(|| ApiError::not_found(format!("unknown camera `{camera}`")))?;
    let ty = image_type(&path);
    let bytes = read_file(path).await?;
    Ok(([(header::CONTENT_TYPE, ty)], Bytes::from(bytes)).into_response())
}

async fn frame_annotations(
    State(state): State<Arc<AppState>>,
    Path((id, frame)): Path<(String, u32)>,
) -> ApiResult {
    let s = session(&state, &id)?;
    check_frame(&s, frame)?;
    let store = s.store.read();
    ok(&frame_doc(&store, frame))
}

/// Replaces the frame's boxes with the body, then answers with the same
/// document a subsequent GET would return.
async fn put_frame(
    State(state): State<Arc<AppState>>,
    Path((id, frame)): Path<(String, u32)>,
    payload: Result<Json<AnnotationDoc>, JsonRejection>,
) -> ApiResult {
    let s = session(&state, &id)?;
    check_frame(&s, frame)?;
    let doc = body(payload)?;
    if doc.format_version != FORMAT_VERSION {
        return Err(ApiError::bad_request(
            "unsupported_version",
            format!("format_version {} is not supported", doc.format_version),
        ));
    }
    if doc.sequence_id != id {
        return Err(ApiError::bad_request(
            "sequence_mismatch",
            format!("body is for sequence `{}`", doc.sequence_id),
        ));
    }
    let mut boxes = Vec::with_capacity(doc.annotations.len());
    for (i, rec) in doc.annotations.into_iter().enumerate() {
        if rec.frame != frame {
            return Err(ApiError::bad_request(
                "frame_mismatch",
                format!("annotations[{i}].frame is {}, expected {frame}", rec.frame),
            ));
        }
        boxes.push(rec.into_box(i)?.1);
    }
    let mut store = s.store.write();
    store.replace_frame(frame, boxes)?;
    ok(&frame_doc(&store, frame))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewAnnotation {
    class: String,
    center: [f64; 3],
    dims: [f64; 3],
    yaw: f64,
    /// Places a keyframe of an existing track instead of starting a new one.
    #[serde(default)]
    track_id: Option<u64>,
}

async fn create_annotation(
    State(state): State<Arc<AppState>>,
    Path((id, frame)): Path<(String, u32)>,
    payload: Result<Json<NewAnnotation>, JsonRejection>,
) -> ApiResult {
    let s = session(&state, &id)?;
    check_frame(&s, frame)?;
    let req = body(payload)?;
    let class: ClassLabel = req
        .class
        .parse()
        .map_err(|e: crate::geometry::UnknownClass| ApiError::bad_request("invalid_box", e.to_string()))?;
    let template = Box3D::new(
        Vec3::from(req.center),
        Vec3::from(req.dims),
        req.yaw,
        class,
        req.track_id.unwrap_or(0),
    )
    .map_err(|e| ApiError::bad_request("invalid_box", e.to_string()))?;
    let mut store = s.store.write();
    let track = match req.track_id {
        Some(t) => {
            store.place_keyframe(frame, t, template)?;
            t
        }
        None => store.create_annotation(frame, template)?,
    };
    let created = store.get(frame, track).expect("just written");
    Ok(json_response(StatusCode::CREATED, &AnnotationRecord::from_box(frame, created)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KeyframeFlag {
    keyframe: bool,
}

async fn mark_keyframe(
    State(state): State<Arc<AppState>>,
    Path((id, frame, track)): Path<(String, u32, u64)>,
    payload: Result<Json<KeyframeFlag>, JsonRejection>,
) -> ApiResult {
    let s = session(&state, &id)?;
    let req = body(payload)?;
    let mut store = s.store.write();
    store.mark_keyframe(frame, track, req.keyframe)?;
    ok(&json!({ "frame": frame, "track_id": track, "keyframe": store.is_keyframe(frame, track) }))
}

async fn keyframes(State(state): State<Arc<AppState>>, Path((id, track)): Path<(String, u64)>) -> ApiResult {
    let s = session(&state, &id)?;
    let store = s.store.read();
    let frames = store.keyframes(track).ok_or_else(|| ApiError::not_found(format!("unknown track {track}")))?;
    ok(&json!({ "track_id": track, "keyframes": frames }))
}

async fn projections(
    State(state): State<Arc<AppState>>,
    Path((id, frame, track)): Path<(String, u32, u64)>,
) -> ApiResult {
    let s = session(&state, &id)?;
    let b = *s.store.read().get(frame, track).ok_or_else(|| {
        ApiError::not_found(format!("no annotation for track {track} on frame {frame}"))
    })?;
    let list: Vec<_> = s.manifest.cameras.iter().filter_map(|c| project_box(c, &b)).collect();
    ok(&list)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InterpolateRequest {
    start: u32,
    end: u32,
}

async fn interpolate(
    State(state): State<Arc<AppState>>,
    Path((id, track)): Path<(String, u64)>,
    payload: Result<Json<InterpolateRequest>, JsonRejection>,
) -> ApiResult {
    let s = session(&state, &id)?;
    let req = body(payload)?;
    let written = s.store.write().interpolate_range(track, req.start, req.end)?;
    ok(&json!({ "written": written, "range": [req.start, req.end] }))
}

fn history_response(op: Option<EditOp>) -> ApiResult {
    ok(&match op {
        Some(op) => json!({ "applied": true, "kind": op.kind, "frame": op.frame, "track_id": op.track_id }),
        None => json!({ "applied": false }),
    })
}

async fn undo(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let s = session(&state, &id)?;
    let op = s.store.write().undo();
    history_response(op)
}

async fn redo(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let s = session(&state, &id)?;
    let op = s.store.write().redo();
    history_response(op)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EvaluateRequest {
    /// Relative paths are resolved against the sequence directory.
    gt_path: PathBuf,
    #[serde(default = "default_threshold")]
    threshold: f64,
    #[serde(default)]
    schema: Option<String>,
    #[serde(default)]
    track_consistent: bool,
}

fn default_threshold() -> f64 {
    DEFAULT_IOU_THRESHOLD
}

async fn evaluate(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    payload: Result<Json<EvaluateRequest>, JsonRejection>,
) -> ApiResult {
    let s = session(&state, &id)?;
    let req = body(payload)?;
    let schema: GtSchema = match &req.schema {
        Some(name) => name.parse().map_err(|e: crate::dataset::DatasetError| {
            ApiError::bad_request("import_failed", e.to_string())
        })?,
        None => GtSchema::Native,
    };
    let gt_path = s.manifest.root.join(&req.gt_path);
    let pred = s.store.read().to_annotation_file();
    let options = EvalOptions {
        iou_threshold: req.threshold,
        track_consistent: req.track_consistent,
    };
    let report = tokio::task::spawn_blocking(move || evaluate_against_file(&pred, &gt_path, schema, &options))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    ok(&report)
}

async fn export(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let s = session(&state, &id)?;
    let doc = s.store.read().to_annotation_file().to_doc();
    ok(&doc)
}
