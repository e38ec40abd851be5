//! `CTRV` checkpoint container.
//!
//! Layout: magic `CTRV`, format version (u32 LE), header length (u32 LE),
//! UTF-8 JSON header, then every parameter's f32 values (LE) in header order.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::array::Tensor;
use super::graph::ParamSet;

pub const MAGIC: &[u8; 4] = b"CTRV";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a CTRV checkpoint (bad magic bytes)")]
    BadMagic,
    #[error("unsupported checkpoint version {found} (expected {FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("malformed checkpoint header: {0}")]
    Header(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamShape {
    pub name: String,
    pub shape: Vec<usize>,
    #[serde(default = "yes")]
    pub trainable: bool,
    #[serde(default)]
    pub frozen_rows: Vec<usize>,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub model_kind: String,
    pub hyperparameters: serde_json::Value,
    pub vocab_hash: String,
    pub params: Vec<ParamShape>,
    /// Model-specific tables (vocabulary, counts, threshold).
    #[serde(default)]
    pub extra: serde_json::Value,
}

pub fn write_checkpoint<W: Write>(
    mut w: W,
    mut header: CheckpointHeader,
    params: &ParamSet<f32>,
) -> Result<(), CheckpointError> {
    header.params = params
        .entries()
        .iter()
        .map(|e| ParamShape {
            name: e.name.clone(),
            shape: e.value.shape().to_vec(),
            trainable: e.trainable,
            frozen_rows: e.frozen_rows.clone(),
        })
        .collect();
    let json = serde_json::to_vec(&header).map_err(|e| CheckpointError::Header(e.to_string()))?;
    let len = u32::try_from(json.len()).map_err(|_| CheckpointError::Header("header exceeds 4 GiB".into()))?;
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(&json)?;
    for e in params.entries() {
        let mut buf = Vec::with_capacity(e.value.len() * 4);
        for v in e.value.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<(CheckpointHeader, ParamSet<f32>), CheckpointError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != FORMAT_VERSION {
        return Err(CheckpointError::Version { found: version });
    }
    r.read_exact(&mut word)?;
    let len = u32::from_le_bytes(word) as usize;
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    let header: CheckpointHeader = serde_json::from_slice(&json).map_err(|e| CheckpointError::Header(e.to_string()))?;

    let mut params = ParamSet::new();
    for p in &header.params {
        let n: usize = p.shape.iter().product();
        let mut raw = vec![0u8; n * 4];
        r.read_exact(&mut raw)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let t = Tensor::new(p.shape.clone(), data)
            .map_err(|e| CheckpointError::Header(format!("parameter {}: {e}", p.name)))?;
        let id = params.add(p.name.clone(), t);
        params.entry_mut(id).trainable = p.trainable;
        params.entry_mut(id).frozen_rows = p.frozen_rows.clone();
    }
    Ok((header, params))
}
