//! Run directories: output files stamped with run metadata and a manifest
//! of SHA-256 checksums.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::write_text;

pub const TOOL: &str = "trendmine";
pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMeta {
    pub tool: String,
    pub format_version: u32,
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
    pub rng: String,
}

impl RunMeta {
    pub fn new(command: &str, seed: u64, config_hash: String) -> Self {
        Self {
            tool: TOOL.into(),
            format_version: FORMAT_VERSION,
            command: command.into(),
            seed,
            config_hash,
            rng: trendmine_core::rng::RNG_ALGORITHM.into(),
        }
    }

    fn csv_comment(&self) -> String {
        format!(
            "# {} format_version={} command={} seed={} config_hash={} rng={}\n",
            self.tool, self.format_version, self.command, self.seed, self.config_hash, self.rng
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Time span covered by the input records, in epoch seconds. Manifests
/// carry this rather than wall-clock times so reruns stay byte-identical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataSpan {
    pub first_timestamp: i64,
    pub last_timestamp: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub meta: RunMeta,
    #[serde(default)]
    pub data_span: Option<DataSpan>,
    /// Input name to SHA-256 of its contents.
    pub inputs: BTreeMap<String, String>,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

pub struct RunWriter {
    dir: PathBuf,
    meta: RunMeta,
    inputs: BTreeMap<String, String>,
    data_span: Option<DataSpan>,
    files: BTreeMap<String, FileEntry>,
}

impl RunWriter {
    pub fn new(dir: impl Into<PathBuf>, meta: RunMeta) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self {
            dir,
            meta,
            inputs: BTreeMap::new(),
            data_span: None,
            files: BTreeMap::new(),
        })
    }

    pub fn meta(&self) -> &RunMeta {
        &self.meta
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn record_input(&mut self, name: &str, path: &Path) -> Result<()> {
        let h = hash_file(path)?;
        self.inputs.insert(name.into(), h);
        Ok(())
    }

    pub fn set_data_span(&mut self, span: Option<DataSpan>) {
        self.data_span = span;
    }

    pub fn write_raw(&mut self, rel: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(rel);
        write_text(&path, contents)?;
        self.files.insert(
            rel.into(),
            FileEntry {
                path: rel.into(),
                sha256: sha256_hex(contents.as_bytes()),
                bytes: contents.len() as u64,
            },
        );
        Ok(())
    }

    /// A JSON object `{"meta": .., key: value}`.
    pub fn write_json<T: Serialize>(&mut self, rel: &str, key: &str, value: &T) -> Result<()> {
        let body = json!({ "meta": self.meta, key: value });
        let mut text = serde_json::to_string_pretty(&body).map_err(Error::invalid)?;
        text.push('\n');
        self.write_raw(rel, &text)
    }

    /// CSV text preceded by a `#` metadata line.
    pub fn write_csv(&mut self, rel: &str, body: &str) -> Result<()> {
        let text = format!("{}{}", self.meta.csv_comment(), body);
        self.write_raw(rel, &text)
    }

    pub fn finish(self) -> Result<Manifest> {
        let manifest = Manifest {
            meta: self.meta,
            data_span: self.data_span,
            inputs: self.inputs,
            files: self.files.into_values().collect(),
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(Error::invalid)?;
        text.push('\n');
        write_text(&self.dir.join(MANIFEST), &text)?;
        Ok(manifest)
    }
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}

/// Plain CSV text from rows of displayable cells.
pub fn csv_table<R, C>(header: &[&str], rows: R) -> String
where
    R: IntoIterator<Item = Vec<C>>,
    C: ToString,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for row in rows {
        w.write_record(row.iter().map(ToString::to_string)).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8")
}

pub fn value_of<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}
