//! JSON-lines persistence for documents, seeds, annotations and link edges.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::CorpusError;

/// Highest dataset schema version this build reads.
pub const SCHEMA_VERSION: u64 = 1;

/// Parses JSON-lines, skipping blank lines. A `schema_version` field other
/// than [`SCHEMA_VERSION`] is rejected before field validation.
pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let mut value: serde_json::Value = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        if let Some(obj) = value.as_object_mut() {
            if let Some(v) = obj.remove("schema_version") {
                if v.as_u64() != Some(SCHEMA_VERSION) {
                    return Err(CorpusError::SchemaVersion {
                        line: lineno,
                        found: v.to_string(),
                    });
                }
            }
        }
        out.push(serde_json::from_value(value).map_err(|e| CorpusError::Parse {
            line: lineno,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize, W: Write>(mut w: W, items: &[T]) -> Result<(), CorpusError> {
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| CorpusError::Parse {
            line: 0,
            message: e.to_string(),
        })?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl_file<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CorpusError> {
    let f = File::open(path)
        .map_err(|e| CorpusError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    read_jsonl(BufReader::new(f))
}

pub fn write_jsonl_file<T: Serialize>(path: &Path, items: &[T]) -> Result<(), CorpusError> {
    write_jsonl(BufWriter::new(File::create(path)?), items)
}
