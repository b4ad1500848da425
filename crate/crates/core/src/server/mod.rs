//! HTTP service for the browser annotator and other clients.
//!
//! Each sequence found under the data root gets one in-memory
//! [`AnnotationStore`]. Mutations take the store's write lock, so edits to a
//! sequence are applied in a single total order; reads take the read lock
//! and always observe a state between two edits. A background task autosaves
//! dirty stores.
//!
//! Endpoints (all JSON unless noted):
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/api/sequences` | list of sequences |
//! | GET | `/api/sequences/{id}/manifest` | manifest document |
//! | GET | `/api/sequences/{id}/frames/{i}/pointcloud` | `f32 × 4` binary |
//! | GET | `/api/sequences/{id}/frames/{i}/images/{camera}` | stored bytes |
//! | GET, PUT | `/api/sequences/{id}/frames/{i}/annotations` | annotation document for one frame |
//! | POST | `/api/sequences/{id}/frames/{i}/annotations` | create a track, `{class, center, dims, yaw}` |
//! | POST | `/api/sequences/{id}/frames/{i}/tracks/{t}/keyframe` | `{keyframe: bool}` |
//! | GET | `/api/sequences/{id}/tracks/{t}/keyframes` | keyframe indices of a track |
//! | POST | `/api/sequences/{id}/tracks/{t}/interpolate` | `{start, end}` |
//! | GET | `/api/sequences/{id}/frames/{i}/tracks/{t}/projections` | projected boxes |
//! | POST | `/api/sequences/{id}/undo`, `/redo` | |
//! | POST | `/api/sequences/{id}/evaluate` | `{gt_path, threshold}` |
//! | GET | `/api/sequences/{id}/export` | full annotation document |

mod error;
mod routes;

use std::collections::BTreeMap;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use parking_lot::{Mutex, RwLock};
use thiserror::Error;

use crate::dataset::{load_annotations, load_manifest, DatasetError, SequenceManifest};
use crate::store::{Autosave, AnnotationStore, StoreError};

pub use error::ApiError;
pub use routes::router;

/// File name of the manifest that marks a sequence directory.
pub const MANIFEST_NAME: &str = "manifest.json";
/// Annotations of a sequence are persisted next to its manifest.
pub const ANNOTATIONS_NAME: &str = "annotations.json";

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("unreadable data root {path}: {source}")]
    DataRoot {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no `{MANIFEST_NAME}` found under {0}")]
    NoSequences(PathBuf),
    #[error("duplicate sequence id `{0}`")]
    DuplicateSequence(String),
    #[error("loading {path}: {source}")]
    Dataset {
        path: PathBuf,
        #[source]
        source: DatasetError,
    },
    #[error("loading {path}: {source}")]
    Store {
        path: PathBuf,
        #[source]
        source: StoreError,
    },
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub data_root: PathBuf,
    pub bind: IpAddr,
    pub port: u16,
    pub autosave_interval: Duration,
    /// Served at `/` when set.
    pub static_dir: Option<PathBuf>,
}

impl ServerConfig {
    pub fn new(data_root: impl Into<PathBuf>) -> Self {
        Self {
            data_root: data_root.into(),
            bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: 8080,
            autosave_interval: crate::store::DEFAULT_AUTOSAVE_INTERVAL,
            static_dir: None,
        }
    }
}

/// Everything the service knows about one loaded sequence.
pub struct Session {
    pub manifest: SequenceManifest,
    pub store: RwLock<AnnotationStore>,
    pub autosave: Mutex<Autosave>,
}

impl Session {
    pub fn save_path(&self) -> PathBuf {
        self.autosave.lock().path().to_path_buf()
    }
}

pub struct AppState {
    pub sessions: BTreeMap<String, Arc<Session>>,
    pub static_dir: Option<PathBuf>,
}

impl AppState {
    /// Finds every `manifest.json` at most two levels below `root` and opens
    /// a session for it, resuming from `annotations.json` when present.
    pub fn load(root: &Path, autosave_interval: Duration) -> Result<Self, ServerError> {
        let mut manifests = Vec::new();
        collect_manifests(root, 2, &mut manifests)?;
        manifests.sort();
        if manifests.is_empty() {
            return Err(ServerError::NoSequences(root.to_path_buf()));
        }
        let now = Instant::now();
        let mut sessions = BTreeMap::new();
        for path in manifests {
            let manifest = load_manifest(&path).map_err(|source| ServerError::Dataset {
                path: path.clone(),
                source,
            })?;
            let save_path = manifest.root.join(ANNOTATIONS_NAME);
            let store = if save_path.exists() {
                let file = load_annotations(&save_path).map_err(|source| ServerError::Dataset {
                    path: save_path.clone(),
                    source,
                })?;
                let mut s = AnnotationStore::from_annotation_file(&file, manifest.frame_count()).map_err(
                    |source| ServerError::Store {
                        path: save_path.clone(),
                        source,
                    },
                )?;
                s.mark_saved();
                s
            } else {
                AnnotationStore::new(manifest.sequence_id.clone(), manifest.frame_count())
            };
            let id = manifest.sequence_id.clone();
            let session = Session {
                store: RwLock::new(store),
                autosave: Mutex::new(Autosave::new(save_path, autosave_interval, now)),
                manifest,
            };
            if sessions.insert(id.clone(), Arc::new(session)).is_some() {
                return Err(ServerError::DuplicateSequence(id));
            }
        }
        Ok(Self {
            sessions,
            static_dir: None,
        })
    }

    /// One autosave pass over all sessions. Failures are logged to stderr and
    /// retried on the next pass.
    pub fn autosave_tick(&self, now: Instant) {
        for (id, s) in &self.sessions {
            let mut store = s.store.write();
            if let Err(e) = s.autosave.lock().tick(&mut store, now) {
                eprintln!("autosave of `{id}` failed: {e}");
            }
        }
    }

    /// Saves every dirty store immediately.
    pub fn flush_all(&self) {
        for (id, s) in &self.sessions {
            let mut store = s.store.write();
            if store.is_dirty() {
                if let Err(e) = s.autosave.lock().flush(&mut store, Instant::now()) {
                    eprintln!("saving `{id}` failed: {e}");
                }
            }
        }
    }
}

fn collect_manifests(dir: &Path, depth: usize, out: &mut Vec<PathBuf>) -> Result<(), ServerError> {
    let entries = std::fs::read_dir(dir).map_err(|source| ServerError::DataRoot {
        path: dir.to_path_buf(),
        source,
    })?;
    for entry in entries.flatten() {
        let path = entry.path();
        if path.is_dir() {
            if depth > 0 {
                collect_manifests(&path, depth - 1, out)?;
            }
        } else if path.file_name().is_some_and(|n| n == MANIFEST_NAME) {
            out.push(path);
        }
    }
    Ok(())
}

/// Loads the data root and binds the listener. Returns the bound address
/// and a future that runs the service until Ctrl-C, flushing stores on exit.
pub async fn bind(
    config: &ServerConfig,
) -> Result<(SocketAddr, impl std::future::Future<Output = Result<(), ServerError>>), ServerError> {
    let mut state = AppState::load(&config.data_root, config.autosave_interval)?;
    state.static_dir = config.static_dir.clone();
    let state = Arc::new(state);
    let addr = SocketAddr::new(config.bind, config.port);
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServerError::Bind { addr, source })?;
    let local = listener.local_addr()?;
    let app = router(state.clone());

    let ticker_state = state.clone();
    let tick_every = config.autosave_interval.min(Duration::from_secs(1)).max(Duration::from_millis(50));
    let ticker = tokio::spawn(async move {
        let mut iv = tokio::time::interval(tick_every);
        loop {
            iv.tick().await;
            ticker_state.autosave_tick(Instant::now());
        }
    });

    let run = async move {
        let served = axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await;
        ticker.abort();
        state.flush_all();
        served.map_err(ServerError::from)
    };
    Ok((local, run))
}

/// Runs the service until Ctrl-C.
pub async fn serve(config: ServerConfig) -> Result<(), ServerError> {
    let (addr, run) = bind(&config).await?;
    eprintln!("serving {} on http://{addr}", config.data_root.display());
    run.await
}
