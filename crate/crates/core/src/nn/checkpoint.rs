//! Model checkpoints: a JSON manifest plus a flat binary weight blob.
//!
//! The manifest records the architecture (as arbitrary model-specific
//! JSON) and an ordered list of parameter blocks; `weights.bin` is the
//! concatenation of those blocks as little-endian 64-bit reals. Loading
//! reproduces parameter bytes exactly, so a saved model is bit-identical
//! to the one in memory.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const WEIGHTS_FILE: &str = "weights.bin";
const FORMAT: &str = "fdia-checkpoint/1";

/// One named parameter block inside the flat blob.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockInfo {
    pub name: String,
    pub shape: Vec<usize>,
    /// Offset into the blob, counted in f64 elements.
    pub offset: usize,
    pub len: usize,
}

/// Checkpoint manifest: format tag, model-specific metadata, block table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    /// Architecture, hyperparameters, seed — owned by the model type.
    pub model: serde_json::Value,
    pub blocks: Vec<BlockInfo>,
}

impl Manifest {
    /// Builds a manifest from (name, shape) pairs laid out contiguously.
    pub fn new(model: serde_json::Value, blocks: &[(&str, Vec<usize>)]) -> Self {
        let mut offset = 0;
        let blocks = blocks
            .iter()
            .map(|(name, shape)| {
                let len: usize = shape.iter().product();
                let info =
                    BlockInfo { name: (*name).to_string(), shape: shape.clone(), offset, len };
                offset += len;
                info
            })
            .collect();
        Manifest { format: FORMAT.to_string(), model, blocks }
    }

    pub fn total_len(&self) -> usize {
        self.blocks.iter().map(|b| b.len).sum()
    }

    /// Slice of `flat` covered by the named block.
    pub fn block<'a>(&self, flat: &'a [f64], name: &str) -> Option<&'a [f64]> {
        let b = self.blocks.iter().find(|b| b.name == name)?;
        Some(&flat[b.offset..b.offset + b.len])
    }
}

/// Writes `manifest.json` and `weights.bin` under `dir` (created if absent).
pub fn save_checkpoint(dir: &Path, manifest: &Manifest, flat: &[f64]) -> Result<()> {
    if manifest.total_len() != flat.len() {
        return Err(Error::Invalid(format!(
            "manifest covers {} parameters but {} were provided",
            manifest.total_len(),
            flat.len()
        )));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::Schema(format!("manifest serialization: {e}")))?;
    text.push('\n');
    fs::write(&manifest_path, text).map_err(|e| Error::io(&manifest_path, e))?;

    let mut bytes = Vec::with_capacity(flat.len() * 8);
    for v in flat {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let blob_path = dir.join(WEIGHTS_FILE);
    fs::write(&blob_path, bytes).map_err(|e| Error::io(&blob_path, e))?;
    Ok(())
}

/// Reads a checkpoint directory back into (manifest, flat parameters).
pub fn load_checkpoint(dir: &Path) -> Result<(Manifest, Vec<f64>)> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| Error::Schema(format!("{}: {e}", manifest_path.display())))?;
    if manifest.format != FORMAT {
        return Err(Error::Schema(format!(
            "{}: unsupported checkpoint format `{}`",
            manifest_path.display(),
            manifest.format
        )));
    }
    let mut offset = 0;
    for b in &manifest.blocks {
        if b.offset != offset || b.len != b.shape.iter().product::<usize>() {
            return Err(Error::Schema(format!(
                "{}: block `{}` is not contiguous with its neighbors",
                manifest_path.display(),
                b.name
            )));
        }
        offset += b.len;
    }
    let blob_path = dir.join(WEIGHTS_FILE);
    let bytes = fs::read(&blob_path).map_err(|e| Error::io(&blob_path, e))?;
    if bytes.len() != offset * 8 {
        return Err(Error::Schema(format!(
            "{}: expected {} bytes for {} parameters, found {}",
            blob_path.display(),
            offset * 8,
            offset,
            bytes.len()
        )));
    }
    let flat: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk size")))
        .collect();
    if flat.iter().any(|v| !v.is_finite()) {
        return Err(Error::Schema(format!(
            "{}: blob contains non-finite parameters",
            blob_path.display()
        )));
    }
    Ok((manifest, flat))
}
