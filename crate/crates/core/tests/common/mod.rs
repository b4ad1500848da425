#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use http_body_util::BodyExt;
use rand::Rng;
use tower::ServiceExt;

use trackbox::server::{router, AppState};
use trackbox::store::{Delta, StoreSnapshot};
use trackbox::synth::{random_box, write_sequence};
use trackbox::{AnnotationStore, Box3D, ClassLabel, Vec3};

pub fn any_box(rng: &mut impl Rng, track_id: u64) -> Box3D {
    random_box(rng, track_id, 30.0)
}

/// A data root holding one synthetic sequence `toy` with `frames` frames.
/// The sequence directory also holds the reference as `gt.json`.
pub fn toy_root(frames: u32, tracks: u64, seed: u64) -> (tempfile::TempDir, PathBuf) {
    let root = tempfile::tempdir().unwrap();
    let seq = root.path().join("toy");
    write_sequence(&seq, "toy", frames, tracks, seed).unwrap();
    (root, seq)
}

pub fn app(root: &Path) -> (Arc<AppState>, axum::Router) {
    let state = Arc::new(AppState::load(root, std::time::Duration::from_secs(3600)).unwrap());
    let r = router(state.clone());
    (state, r)
}

pub async fn send(app: &axum::Router, method: Method, uri: &str, body: Option<String>) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(b) => {
            req = req.header("content-type", "application/json");
            Body::from(b)
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

pub async fn send_text(app: &axum::Router, method: Method, uri: &str, body: Option<String>) -> (StatusCode, String) {
    let (s, b) = send(app, method, uri, body).await;
    (s, String::from_utf8(b).unwrap())
}

/// One logical store operation, phrased in terms of the track IDs the
/// scripted store handed out.
#[derive(Debug, Clone)]
pub enum Action {
    Create(u32, Box3D),
    PlaceKeyframe(u32, u64, Box3D),
    Edit(u32, u64, Delta),
    MarkKeyframe(u32, u64, bool),
    Delete(u32, u64),
    DeleteTrack(u64),
    Interpolate(u64, u32, u32),
    ReplaceFrame(u32, Vec<Box3D>),
}

/// Applies `action` and returns the created track ID for creates.
pub fn perform(store: &mut AnnotationStore, action: &Action, ids: &dyn Fn(u64) -> u64) -> Result<Option<u64>, String> {
    let e = |e: trackbox::store::StoreError| e.to_string();
    match action {
        Action::Create(f, b) => store.create_annotation(*f, *b).map(Some).map_err(e),
        Action::PlaceKeyframe(f, t, b) => store
            .place_keyframe(*f, ids(*t), Box3D { track_id: ids(*t), ..*b })
            .map(|_| None)
            .map_err(e),
        Action::Edit(f, t, d) => store.edit_annotation(*f, ids(*t), *d).map(|_| None).map_err(e),
        Action::MarkKeyframe(f, t, k) => store.mark_keyframe(*f, ids(*t), *k).map(|_| None).map_err(e),
        Action::Delete(f, t) => store.delete_annotation(*f, ids(*t)).map(|_| None).map_err(e),
        Action::DeleteTrack(t) => store.delete_track(ids(*t)).map(|_| None).map_err(e),
        Action::Interpolate(t, a, b) => store.interpolate_range(ids(*t), *a, *b).map(|_| None).map_err(e),
        Action::ReplaceFrame(f, boxes) => {
            let mapped = boxes.iter().map(|b| Box3D { track_id: ids(b.track_id), ..*b }).collect();
            store.replace_frame(*f, mapped).map(|_| None).map_err(e)
        }
    }
}

fn random_delta(rng: &mut impl Rng) -> Delta {
    let v = |r: &mut dyn rand::RngCore| {
        Vec3::new(r.random_range(-2.0..2.0), r.random_range(-2.0..2.0), r.random_range(-0.5..0.5))
    };
    match rng.random_range(0..7) {
        0 => Delta::Translate(v(rng)),
        1 => Delta::SetCenter(v(rng)),
        2 => Delta::Resize(v(rng)),
        3 => Delta::SetDims(Vec3::new(rng.random_range(-1.0..5.0), rng.random_range(0.1..3.0), rng.random_range(0.1..3.0))),
        4 => Delta::Rotate(rng.random_range(-7.0..7.0)),
        5 => Delta::SetYaw(rng.random_range(-4.0..4.0)),
        _ => Delta::SetClass(ClassLabel::ALL[rng.random_range(0..5)]),
    }
}

/// Picks a random action against the current store, biased toward ones that
/// succeed.
pub fn random_action(rng: &mut impl Rng, store: &AnnotationStore, frames: u32) -> Action {
    let snap = store.snapshot();
    let slots: Vec<(u32, u64)> = snap.annotations.keys().copied().collect();
    let tracks: Vec<u64> = slots.iter().map(|s| s.1).collect::<BTreeSet<_>>().into_iter().collect();
    let frame = rng.random_range(0..frames);
    let pick_slot = |rng: &mut dyn rand::RngCore| slots[rng.random_range(0..slots.len())];
    match rng.random_range(0..100) {
        _ if slots.is_empty() => Action::Create(frame, any_box(rng, 0)),
        0..=14 => Action::Create(frame, any_box(rng, 0)),
        15..=29 => {
            let t = tracks[rng.random_range(0..tracks.len())];
            let class = snap.annotations.iter().find(|((_, tt), _)| *tt == t).map(|(_, b)| b.class_label);
            let mut b = any_box(rng, t);
            if let Some(c) = class {
                b.class_label = c;
            }
            Action::PlaceKeyframe(frame, t, b)
        }
        30..=54 => {
            let (f, t) = pick_slot(rng);
            Action::Edit(f, t, random_delta(rng))
        }
        55..=59 => {
            let (f, t) = pick_slot(rng);
            Action::MarkKeyframe(f, t, rng.random_bool(0.5))
        }
        60..=66 => {
            let (f, t) = pick_slot(rng);
            Action::Delete(f, t)
        }
        67..=69 => Action::DeleteTrack(tracks[rng.random_range(0..tracks.len())]),
        70..=89 => {
            let t = tracks[rng.random_range(0..tracks.len())];
            let ks: Vec<u32> = snap.keyframes.get(&t).map(|k| k.iter().copied().collect()).unwrap_or_default();
            if ks.len() >= 2 && rng.random_bool(0.9) {
                let i = rng.random_range(0..ks.len() - 1);
                let j = rng.random_range(i + 1..ks.len());
                Action::Interpolate(t, ks[i], ks[j])
            } else {
                Action::Interpolate(t, rng.random_range(0..frames), rng.random_range(0..frames))
            }
        }
        _ => {
            let existing: Vec<Box3D> = store.frame_boxes(frame);
            let mut kept = Vec::new();
            for b in existing {
                if rng.random_bool(0.7) {
                    let dx = rng.random_range(-1.0..1.0);
                    kept.push(Box3D { center: b.center + Vec3::new(dx, 0.0, 0.0), ..b });
                }
            }
            Action::ReplaceFrame(frame, kept)
        }
    }
}

/// Rewrites a snapshot's track IDs through `map`.
pub fn remap(s: &StoreSnapshot, map: &BTreeMap<u64, u64>) -> StoreSnapshot {
    let m = |t: u64| *map.get(&t).unwrap_or(&t);
    StoreSnapshot {
        annotations: s
            .annotations
            .iter()
            .map(|(&(f, t), b)| ((f, m(t)), Box3D { track_id: m(t), ..*b }))
            .collect(),
        keyframes: s
            .keyframes
            .iter()
            .map(|(&t, ks)| (m(t), ks.clone()))
            .collect::<BTreeMap<u64, BTreeSet<u32>>>(),
    }
}

#[derive(Debug, Default)]
pub struct ScriptStats {
    pub applied: usize,
    pub rejected: usize,
    pub undos: usize,
    pub redos: usize,
}

/// Runs one random script of `len` steps with interleaved undo/redo against
/// a store seeded from `initial`, checking on every undo that the state is
/// exactly the one before the op. At the end the state must equal a fresh
/// replay of the net script, and undoing everything must restore the initial
/// state. Returns a description of the first violation.
pub fn check_script(rng: &mut impl Rng, initial: &AnnotationStore, frames: u32, len: usize) -> Result<ScriptStats, String> {
    let mut store = initial.clone();
    let start = store.snapshot();
    let mut stats = ScriptStats::default();
    // Applied actions with the state before each, and undone actions.
    let mut done: Vec<(Action, Option<u64>, StoreSnapshot)> = Vec::new();
    let mut undone: Vec<(Action, Option<u64>, StoreSnapshot)> = Vec::new();
    for step in 0..len {
        let roll = rng.random_range(0..100);
        if roll < 15 {
            let before = store.snapshot();
            match (store.undo(), done.pop()) {
                (Some(_), Some(entry)) => {
                    if store.snapshot() != entry.2 {
                        return Err(format!("step {step}: undo of {:?} did not restore state", entry.0));
                    }
                    undone.push(entry);
                    stats.undos += 1;
                }
                (None, None) => {
                    if store.snapshot() != before {
                        return Err(format!("step {step}: empty undo changed state"));
                    }
                }
                _ => return Err(format!("step {step}: undo stack out of sync")),
            }
        } else if roll < 22 {
            match (store.redo(), undone.pop()) {
                (Some(_), Some(entry)) => {
                    done.push(entry);
                    stats.redos += 1;
                }
                (None, None) => {}
                _ => return Err(format!("step {step}: redo stack out of sync")),
            }
        } else {
            let action = random_action(rng, &store, frames);
            let before = store.snapshot();
            let depth = store.undo_depth();
            match perform(&mut store, &action, &|t| t) {
                Ok(created) if store.undo_depth() == depth + 1 => {
                    done.push((action, created, before));
                    undone.clear();
                    stats.applied += 1;
                }
                Ok(_) => {
                    if store.snapshot() != before {
                        return Err(format!("step {step}: unrecorded {action:?} changed state"));
                    }
                }
                Err(_) => {
                    if store.snapshot() != before || store.undo_depth() != depth {
                        return Err(format!("step {step}: rejected {action:?} changed state"));
                    }
                    stats.rejected += 1;
                }
            }
        }
    }

    // Fresh replay of the net script.
    let mut replay = initial.clone();
    let mut ids: BTreeMap<u64, u64> = BTreeMap::new();
    for (action, created, _) in &done {
        let map = ids.clone();
        let result = perform(&mut replay, action, &|t| *map.get(&t).unwrap_or(&t))
            .map_err(|e| format!("replay of {action:?} failed: {e}"))?;
        if let (Some(orig), Some(new)) = (created, result) {
            ids.insert(*orig, new);
        }
    }
    let inverse: BTreeMap<u64, u64> = ids.iter().map(|(o, n)| (*n, *o)).collect();
    if remap(&replay.snapshot(), &inverse) != store.snapshot() {
        return Err("final state differs from replay of the net script".into());
    }

    while store.undo().is_some() {}
    if store.snapshot() != start {
        return Err("undo-all did not restore the initial state".into());
    }
    Ok(stats)
}

/// A store preloaded with a few tracks, as if opened from a saved file.
pub fn seeded_store(rng: &mut impl Rng, frames: u32) -> AnnotationStore {
    let mut file = trackbox::AnnotationFile::new("script");
    for t in 0..rng.random_range(0..4u64) {
        let b = any_box(rng, t);
        for f in 0..frames {
            if rng.random_bool(0.4) {
                file.push(f, Box3D { center: b.center + Vec3::new(f64::from(f) * 0.3, 0.0, 0.0), ..b });
            }
        }
    }
    AnnotationStore::from_annotation_file(&file, frames).unwrap()
}
