//! Line-delimited JSON transcript files: one header line, then one
//! transcript per line.

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use cheaptalk_core::engine::{ConditionKey, Transcript};
use serde::{Deserialize, Serialize};

pub const TRANSCRIPTS_FILE: &str = "transcripts.jsonl";
pub const STORE_FORMAT: &str = "cheaptalk-transcripts/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoreHeader {
    pub format: String,
    pub condition: ConditionKey,
    pub condition_id: String,
    pub engine_version: String,
    pub master_seed: u64,
    pub rounds: u32,
    pub n_simulations: u32,
    pub simulation_seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub graph_seeds: Vec<u64>,
    pub policies: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: line {line}: {message}", path.display())]
    Line { path: PathBuf, line: usize, message: String },
    #[error("{}: no header line", path.display())]
    MissingHeader { path: PathBuf },
}

/// `results/<condition-id>`.
pub fn cell_dir(results: &Path, key: &ConditionKey) -> PathBuf {
    results.join(key.id())
}

pub fn transcripts_path(results: &Path, key: &ConditionKey) -> PathBuf {
    cell_dir(results, key).join(TRANSCRIPTS_FILE)
}

/// Writes atomically: a temporary sibling is renamed over `path`.
pub fn persist(path: &Path, header: &StoreHeader, transcripts: &[Transcript]) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("jsonl.partial");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        serde_json::to_writer(&mut w, header)?;
        w.write_all(b"\n")?;
        for t in transcripts {
            serde_json::to_writer(&mut w, t)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
    }
    fs::rename(&tmp, path)
}

pub fn load_header(path: &Path) -> Result<StoreHeader, LoadError> {
    let file = File::open(path).map_err(|source| LoadError::Io { path: path.into(), source })?;
    let mut first = String::new();
    BufReader::new(file).read_line(&mut first).map_err(|source| LoadError::Io { path: path.into(), source })?;
    if first.trim().is_empty() {
        return Err(LoadError::MissingHeader { path: path.into() });
    }
    serde_json::from_str(&first).map_err(|e| LoadError::Line { path: path.into(), line: 1, message: e.to_string() })
}

pub fn load(path: &Path) -> Result<(StoreHeader, Vec<Transcript>), LoadError> {
    let file = File::open(path).map_err(|source| LoadError::Io { path: path.into(), source })?;
    let mut header = None;
    let mut transcripts = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| LoadError::Io { path: path.into(), source })?;
        let number = idx + 1;
        let bad = |e: serde_json::Error| LoadError::Line { path: path.into(), line: number, message: e.to_string() };
        if header.is_none() {
            let h: StoreHeader = serde_json::from_str(&line).map_err(bad)?;
            if h.format != STORE_FORMAT {
                return Err(LoadError::Line {
                    path: path.into(),
                    line: number,
                    message: format!("unsupported format {:?}", h.format),
                });
            }
            header = Some(h);
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let t: Transcript = serde_json::from_str(&line).map_err(bad)?;
        transcripts.push(t);
    }
    let header = header.ok_or_else(|| LoadError::MissingHeader { path: path.into() })?;
    Ok((header, transcripts))
}
