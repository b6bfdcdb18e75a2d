//! Line-delimited JSON dataset files.
//!
//! Line 1 is a header object:
//!
//! ```text
//! {"format":"banditroute.dataset","version":1,"embedding_dim":3,
//!  "arms":[{"name":"ada","price_per_1k":"0.0004"}, ...],
//!  "encoder":"all-MiniLM-L6-v2@1"?, "sidecar":"train.emb.f32"?}
//! ```
//!
//! Every following non-empty line is one record:
//!
//! ```text
//! {"query_id":"q1","text":"...","embedding":[...],"correct":[1,0],"tokens":[41,41]}
//! ```
//!
//! When the header names a sidecar, records carry `"embedding_offset"` (a byte
//! offset into the sidecar) instead of `"embedding"`, and the sidecar holds
//! `embedding_dim` little-endian `f32` values per record. Sidecar paths are
//! relative to the dataset file's directory. Inline embedding values are the
//! exact `f64` widening of the stored `f32`, so round trips are bit-exact.

use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetError, QueryRecord, RoutingDataset};
use crate::fsutil::atomic_write;
use crate::roster::{ArmSpec, Roster};

pub const DATASET_FORMAT: &str = "banditroute.dataset";
pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    embedding_dim: usize,
    arms: Vec<ArmSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    encoder: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sidecar: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RecordLine {
    query_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embedding: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embedding_offset: Option<u64>,
    correct: Vec<u8>,
    tokens: Vec<u64>,
}

fn io_err(path: &Path, source: std::io::Error) -> DatasetError {
    DatasetError::Io { path: path.display().to_string(), source }
}

fn schema(line: usize, query_id: Option<&str>, reason: impl Into<String>) -> DatasetError {
    DatasetError::Schema { line, query_id: query_id.map(str::to_string), reason: reason.into() }
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<RoutingDataset, DatasetError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();

    let header_line = match lines.next() {
        Some((_, l)) => l.map_err(|e| io_err(path, e))?,
        None => return Err(schema(1, None, "missing header line")),
    };
    let header: Header =
        serde_json::from_str(&header_line).map_err(|e| schema(1, None, format!("bad header: {e}")))?;
    if header.format != DATASET_FORMAT {
        return Err(schema(1, None, format!("unexpected format {:?}", header.format)));
    }
    if header.version != DATASET_VERSION {
        return Err(schema(1, None, format!("unsupported version {}", header.version)));
    }
    if header.embedding_dim == 0 {
        return Err(schema(1, None, "embedding_dim must be positive"));
    }
    let dim = header.embedding_dim;
    let roster = Roster::new(header.arms).map_err(|e| schema(1, None, e.to_string()))?;
    let sidecar = match &header.sidecar {
        Some(name) => {
            let p = sibling(path, name);
            Some(fs::read(&p).map_err(|e| io_err(&p, e))?)
        }
        None => None,
    };

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RecordLine =
            serde_json::from_str(&line).map_err(|e| schema(line_no, None, format!("bad record: {e}")))?;
        let qid = raw.query_id.as_str();
        let embedding = match (&sidecar, raw.embedding, raw.embedding_offset) {
            (None, Some(v), None) => v.into_iter().map(|x| x as f32).collect::<Vec<f32>>(),
            (Some(bytes), None, Some(off)) => read_sidecar_slice(bytes, off, dim)
                .ok_or_else(|| schema(line_no, Some(qid), format!("embedding_offset {off} outside sidecar")))?,
            (None, _, Some(_)) => return Err(schema(line_no, Some(qid), "embedding_offset without sidecar")),
            (Some(_), Some(_), _) => return Err(schema(line_no, Some(qid), "inline embedding in sidecar dataset")),
            (_, None, None) => return Err(schema(line_no, Some(qid), "missing embedding")),
        };
        if embedding.len() != dim {
            return Err(schema(
                line_no,
                Some(qid),
                format!("embedding length {} != embedding_dim {dim}", embedding.len()),
            ));
        }
        let correct = raw
            .correct
            .iter()
            .map(|b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(schema(line_no, Some(qid), format!("correctness value {other} is not 0/1"))),
            })
            .collect::<Result<Vec<bool>, _>>()?;
        if correct.len() != roster.len() || raw.tokens.len() != roster.len() {
            return Err(schema(
                line_no,
                Some(qid),
                format!(
                    "{} correctness bits and {} token counts for {} arms",
                    correct.len(),
                    raw.tokens.len(),
                    roster.len()
                ),
            ));
        }
        if !seen.insert(raw.query_id.clone()) {
            return Err(schema(line_no, Some(qid), "duplicate query_id"));
        }
        records.push(QueryRecord { query_id: raw.query_id, text: raw.text, embedding, correct, tokens: raw.tokens });
    }

    RoutingDataset::with_encoder(roster, dim, header.encoder, records).map_err(|e| match e {
        DatasetError::Record { query_id, reason } => schema(0, Some(&query_id), reason),
        other => other,
    })
}

fn read_sidecar_slice(bytes: &[u8], offset: u64, dim: usize) -> Option<Vec<f32>> {
    let start = usize::try_from(offset).ok()?;
    let end = start.checked_add(dim.checked_mul(4)?)?;
    let slice = bytes.get(start..end)?;
    Some(slice.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    match path.parent() {
        Some(dir) => dir.join(name),
        None => PathBuf::from(name),
    }
}

fn header_for(ds: &RoutingDataset, sidecar: Option<&str>) -> Header {
    Header {
        format: DATASET_FORMAT.into(),
        version: DATASET_VERSION,
        embedding_dim: ds.embedding_dim(),
        arms: ds.roster().specs(),
        encoder: ds.encoder().map(str::to_string),
        sidecar: sidecar.map(str::to_string),
    }
}

fn write_lines(ds: &RoutingDataset, w: &mut dyn Write, sidecar: Option<&str>) -> std::io::Result<()> {
    serde_json::to_writer(&mut *w, &header_for(ds, sidecar))?;
    w.write_all(b"\n")?;
    let stride = (ds.embedding_dim() * 4) as u64;
    for (i, r) in ds.records().iter().enumerate() {
        let (embedding, embedding_offset) = match sidecar {
            Some(_) => (None, Some(i as u64 * stride)),
            None => (Some(r.embedding_f64()), None),
        };
        let line = RecordLine {
            query_id: r.query_id.clone(),
            text: r.text.clone(),
            embedding,
            embedding_offset,
            correct: r.correct.iter().map(|b| u8::from(*b)).collect(),
            tokens: r.tokens.clone(),
        };
        serde_json::to_writer(&mut *w, &line)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Writes the dataset with inline embeddings.
pub fn save_dataset(ds: &RoutingDataset, path: impl AsRef<Path>) -> Result<(), DatasetError> {
    let path = path.as_ref();
    atomic_write(path, |w| write_lines(ds, w, None)).map_err(|e| io_err(path, e))
}

/// Writes the dataset with embeddings in a float32 sidecar named `sidecar_name`,
/// placed next to `path`.
pub fn save_dataset_with_sidecar(
    ds: &RoutingDataset,
    path: impl AsRef<Path>,
    sidecar_name: &str,
) -> Result<(), DatasetError> {
    let path = path.as_ref();
    let side_path = sibling(path, sidecar_name);
    atomic_write(&side_path, |w| {
        for r in ds.records() {
            for v in &r.embedding {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    })
    .map_err(|e| io_err(&side_path, e))?;
    atomic_write(path, |w| write_lines(ds, w, Some(sidecar_name))).map_err(|e| io_err(path, e))
}
