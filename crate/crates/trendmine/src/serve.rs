//! Read-only HTTP access to finished run directories.
//!
//! Each request re-hashes the artifact and compares it with the manifest, so
//! a file changed after the run is reported as a server error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Path as UrlPath, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde_json::{json, Value};

use crate::artifacts::{read_manifest, sha256_hex, Manifest, MANIFEST};
use crate::error::{Error, Result};

pub const DEFAULT_PORT: u16 = 8080;

/// Served resources: URL suffix, file in the run directory, payload key.
pub const RESOURCES: [(&str, &str, &str); 4] = [
    ("trends/daily", "trends/daily.json", "trends"),
    ("sentiment", "sentiment.json", "sentiment"),
    ("geo/calls", "geo/calls.json", "calls"),
    ("topics", "topics.json", "topics"),
];

struct Run {
    dir: PathBuf,
    manifest: Manifest,
}

#[derive(Clone)]
pub struct RunStore {
    runs: Arc<BTreeMap<String, Run>>,
}

impl RunStore {
    /// `root` is either one run directory (served under its directory name)
    /// or a directory whose subdirectories are runs.
    pub fn open(root: &Path) -> Result<Self> {
        let mut runs = BTreeMap::new();
        if root.join(MANIFEST).is_file() {
            runs.insert(run_id(root), load(root)?);
        } else {
            let entries = std::fs::read_dir(root).map_err(|e| Error::io(root, e))?;
            for entry in entries {
                let dir = entry.map_err(|e| Error::io(root, e))?.path();
                if dir.join(MANIFEST).is_file() {
                    runs.insert(run_id(&dir), load(&dir)?);
                }
            }
        }
        if runs.is_empty() {
            return Err(Error::invalid(format!(
                "{}: no run directory with a {MANIFEST}",
                root.display()
            )));
        }
        Ok(Self {
            runs: Arc::new(runs),
        })
    }

    pub fn run_ids(&self) -> impl Iterator<Item = &str> {
        self.runs.keys().map(String::as_str)
    }

    fn fetch(&self, id: &str, resource: &str) -> std::result::Result<Value, (StatusCode, String)> {
        let not_found = |what: String| (StatusCode::NOT_FOUND, what);
        let run = self
            .runs
            .get(id)
            .ok_or_else(|| not_found(format!("unknown run {id:?}")))?;
        let (_, file, key) = RESOURCES
            .iter()
            .find(|(r, _, _)| *r == resource)
            .ok_or_else(|| not_found(format!("unknown resource {resource:?}")))?;
        let entry = run
            .manifest
            .files
            .iter()
            .find(|f| f.path == *file)
            .ok_or_else(|| not_found(format!("run {id:?} has no {resource}")))?;
        let internal = |m: String| (StatusCode::INTERNAL_SERVER_ERROR, m);
        let bytes = std::fs::read(run.dir.join(file)).map_err(|e| internal(format!("{file}: {e}")))?;
        if sha256_hex(&bytes) != entry.sha256 {
            return Err(internal(format!("{file}: checksum does not match the manifest")));
        }
        let mut doc: Value =
            serde_json::from_slice(&bytes).map_err(|e| internal(format!("{file}: {e}")))?;
        doc.get_mut(*key)
            .map(Value::take)
            .ok_or_else(|| internal(format!("{file}: missing {key:?}")))
    }

    fn meta(&self, id: &str) -> Option<&crate::artifacts::RunMeta> {
        self.runs.get(id).map(|r| &r.manifest.meta)
    }
}

fn run_id(dir: &Path) -> String {
    dir.canonicalize()
        .ok()
        .as_deref()
        .unwrap_or(dir)
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into())
}

fn load(dir: &Path) -> Result<Run> {
    Ok(Run {
        dir: dir.to_path_buf(),
        manifest: read_manifest(dir)?,
    })
}

pub fn router(store: RunStore) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/runs/{id}/trends/daily", get(|s, p| resource(s, p, "trends/daily")))
        .route("/runs/{id}/sentiment", get(|s, p| resource(s, p, "sentiment")))
        .route("/runs/{id}/geo/calls", get(|s, p| resource(s, p, "geo/calls")))
        .route("/runs/{id}/topics", get(|s, p| resource(s, p, "topics")))
        .fallback(|| async { error(StatusCode::NOT_FOUND, "no such endpoint".into()) })
        .with_state(store)
}

async fn healthz(State(store): State<RunStore>) -> Json<Value> {
    Json(json!({ "status": "ok", "runs": store.run_ids().collect::<Vec<_>>() }))
}

async fn resource(
    State(store): State<RunStore>,
    UrlPath(id): UrlPath<String>,
    name: &'static str,
) -> Response {
    match store.fetch(&id, name) {
        Ok(body) => {
            let mut resp = Json(body).into_response();
            if let Some(meta) = store.meta(&id) {
                let h = resp.headers_mut();
                if let Ok(v) = HeaderValue::from_str(&meta.seed.to_string()) {
                    h.insert("x-trendmine-seed", v);
                }
                if let Ok(v) = HeaderValue::from_str(&meta.config_hash) {
                    h.insert("x-trendmine-config-hash", v);
                }
            }
            resp
        }
        Err((status, msg)) => error(status, msg),
    }
}

fn error(status: StatusCode, msg: String) -> Response {
    let mut resp = (status, Json(json!({ "error": msg }))).into_response();
    resp.headers_mut().insert(
        header::CACHE_CONTROL,
        HeaderValue::from_static("no-store"),
    );
    resp
}

/// Binds `127.0.0.1:port` and serves until the process is stopped.
pub async fn serve(store: RunStore, port: u16) -> Result<()> {
    let addr = std::net::SocketAddr::from(([127, 0, 0, 1], port));
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::io(addr.to_string(), e))?;
    axum::serve(listener, router(store))
        .await
        .map_err(|e| Error::io(addr.to_string(), e))
}
