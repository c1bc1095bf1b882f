//! Checkpoint file: magic, a length-prefixed JSON header describing the
//! model, then every parameter tensor as little-endian `f64` in declaration
//! order.
//!
//! ```text
//! b"TABSEMA-HNN\0"            12 bytes
//! header length               u64 LE
//! header                      JSON (format_version, config, catalog, catalog_hash,
//!                             tensors [{name, shape}], payload_sha256)
//! payload                     f64 LE values
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{HnnConfig, HnnModel, TensorSpec};
use crate::error::{Error, Result};
use crate::table::ClassCatalog;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 12] = b"TABSEMA-HNN\0";

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    config: HnnConfig,
    catalog: ClassCatalog,
    catalog_hash: String,
    tensors: Vec<TensorSpec>,
    payload_sha256: String,
}

pub fn to_bytes(model: &HnnModel) -> Result<Vec<u8>> {
    let mut payload = Vec::with_capacity(model.params.num_parameters() * 8);
    for t in model.params.tensors() {
        for v in t.data {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
    let header = Header {
        format_version: FORMAT_VERSION,
        config: model.config.clone(),
        catalog: model.catalog.clone(),
        catalog_hash: model.catalog.hash(),
        tensors: model.params.specs(),
        payload_sha256: hex::encode(Sha256::digest(&payload)),
    };
    let header = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(MAGIC.len() + 8 + header.len() + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&payload);
    Ok(out)
}

pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<HnnModel> {
    let corrupt = |reason: &str| Error::Corrupt {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if bytes.len() < MAGIC.len() + 8 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(corrupt("not an HNN checkpoint"));
    }
    let mut len = [0u8; 8];
    len.copy_from_slice(&bytes[MAGIC.len()..MAGIC.len() + 8]);
    let header_len = u64::from_le_bytes(len) as usize;
    let start = MAGIC.len() + 8;
    let header_bytes = bytes
        .get(start..start.saturating_add(header_len))
        .ok_or_else(|| corrupt("truncated header"))?;
    let version: serde_json::Value =
        serde_json::from_slice(header_bytes).map_err(|_| corrupt("unreadable header"))?;
    let found = version
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| corrupt("header has no format_version"))? as u32;
    if found != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found,
            expected: FORMAT_VERSION,
        });
    }
    let header: Header =
        serde_json::from_value(version).map_err(|e| corrupt(&format!("bad header: {e}")))?;
    if header.catalog.hash() != header.catalog_hash {
        return Err(corrupt("catalog hash does not match catalog"));
    }
    let payload = &bytes[start + header_len..];
    if hex::encode(Sha256::digest(payload)) != header.payload_sha256 {
        return Err(corrupt("payload checksum mismatch"));
    }
    let mut model = HnnModel::zeroed(header.config, header.catalog)?;
    if model.params.specs() != header.tensors {
        return Err(corrupt("tensor layout does not match configuration"));
    }
    let expected: usize = model.params.num_parameters() * 8;
    if payload.len() != expected {
        return Err(corrupt("payload size does not match tensor layout"));
    }
    let mut chunks = payload.chunks_exact(8);
    for t in model.params.tensors_mut() {
        for v in t.iter_mut() {
            let mut b = [0u8; 8];
            b.copy_from_slice(chunks.next().expect("size checked"));
            *v = f64::from_le_bytes(b);
        }
    }
    Ok(model)
}

pub fn save_checkpoint(model: &HnnModel, path: &Path) -> Result<()> {
    let bytes = to_bytes(model)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<HnnModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes, path)
}

impl HnnModel {
    /// SHA-256 of the checkpoint encoding; identifies a trained model.
    pub fn fingerprint(&self) -> String {
        let bytes = to_bytes(self).expect("header always serializes");
        hex::encode(Sha256::digest(bytes))
    }
}
