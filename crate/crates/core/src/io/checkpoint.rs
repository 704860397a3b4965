//! Model container: a magic line, one line of JSON header, then every
//! parameter tensor as raw little-endian `f32` in canonical order.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::kernel::Tensor;
use crate::model::{Architecture, ModelParams};
use crate::train::TrainConfig;

use super::gmt::{GeneSet, GeneSetCatalog};
use super::IoError;

pub const MAGIC: &str = "SHINE-CHECKPOINT";
pub const FORMAT_VERSION: u32 = 1;

/// Everything needed to run a trained model on new subjects.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams<f32>,
    pub config: TrainConfig,
    pub classes: Vec<String>,
    pub catalog: GeneSetCatalog,
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    endianness: String,
    dtype: String,
    architecture: Architecture,
    config: TrainConfig,
    classes: Vec<String>,
    gene_sets: Vec<GeneSet>,
    tensors: Vec<TensorEntry>,
    payload_bytes: usize,
}

pub fn checkpoint_bytes(ck: &Checkpoint) -> Vec<u8> {
    let p = &ck.params;
    let tensors: Vec<TensorEntry> = p
        .names()
        .into_iter()
        .zip(p.tensors())
        .map(|(name, t)| TensorEntry {
            name,
            shape: t.shape().to_vec(),
        })
        .collect();
    let payload: Vec<u8> = p
        .tensors()
        .iter()
        .flat_map(|t| t.data().iter().flat_map(|v| v.to_le_bytes()))
        .collect();
    let header = Header {
        format_version: FORMAT_VERSION,
        endianness: "little".into(),
        dtype: "f32".into(),
        architecture: p.arch.clone(),
        config: ck.config.clone(),
        classes: ck.classes.clone(),
        gene_sets: ck.catalog.sets().to_vec(),
        tensors,
        payload_bytes: payload.len(),
    };
    let mut out = Vec::with_capacity(payload.len() + 4096);
    out.extend_from_slice(MAGIC.as_bytes());
    out.push(b'\n');
    out.extend_from_slice(
        serde_json::to_string(&header)
            .expect("header serializes")
            .as_bytes(),
    );
    out.push(b'\n');
    out.extend_from_slice(&payload);
    out
}

/// Writes to a temporary file next to `path`, then renames it into place.
pub fn save_checkpoint(ck: &Checkpoint, path: &Path) -> Result<(), IoError> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(&checkpoint_bytes(ck))?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| IoError::Io(e.error))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, IoError> {
    parse_checkpoint(&std::fs::read(path)?)
}

pub fn parse_checkpoint(bytes: &[u8]) -> Result<Checkpoint, IoError> {
    let corrupt = |m: &str| IoError::CorruptCheckpoint(m.to_string());
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| corrupt("missing magic line"))?;
    if &bytes[..nl] != MAGIC.as_bytes() {
        return Err(corrupt("not a checkpoint file"));
    }
    let rest = &bytes[nl + 1..];
    let hl = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| corrupt("missing header"))?;
    let value: serde_json::Value = serde_json::from_slice(&rest[..hl])
        .map_err(|e| IoError::CorruptCheckpoint(format!("header: {e}")))?;
    let version = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| corrupt("no format version"))?;
    if version != FORMAT_VERSION as u64 {
        return Err(IoError::UnsupportedVersion(version));
    }
    let header: Header = serde_json::from_value(value)
        .map_err(|e| IoError::CorruptCheckpoint(format!("header: {e}")))?;
    if header.endianness != "little" || header.dtype != "f32" {
        return Err(corrupt("unsupported payload encoding"));
    }
    let expected = ModelParams::<f32>::expected_shapes(&header.architecture);
    let declared: Vec<Vec<usize>> = header.tensors.iter().map(|t| t.shape.clone()).collect();
    if declared != expected {
        return Err(corrupt("tensor shapes do not match the architecture"));
    }
    let payload = &rest[hl + 1..];
    let needed: usize = declared
        .iter()
        .map(|s| s.iter().product::<usize>() * 4)
        .sum();
    if header.payload_bytes != needed || payload.len() != needed {
        return Err(IoError::CorruptCheckpoint(format!(
            "payload has {} bytes, header declares {}, shapes need {}",
            payload.len(),
            header.payload_bytes,
            needed
        )));
    }
    let mut offset = 0;
    let mut tensors = Vec::with_capacity(declared.len());
    for (entry, shape) in header.tensors.iter().zip(&declared) {
        let n: usize = shape.iter().product();
        let data: Vec<f32> = payload[offset..offset + 4 * n]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        offset += 4 * n;
        let t = Tensor::new(shape, data)
            .map_err(|e| IoError::CorruptCheckpoint(format!("tensor {}: {e}", entry.name)))?;
        tensors.push(t);
    }
    let params = ModelParams::from_tensors(header.architecture, tensors)
        .ok_or_else(|| corrupt("tensor layout"))?;
    let catalog = GeneSetCatalog::new(header.gene_sets)
        .map_err(|e| IoError::CorruptCheckpoint(format!("gene sets: {e}")))?;
    if catalog.num_genes() != params.arch.num_nodes {
        return Err(corrupt("gene catalog size does not match the node count"));
    }
    if header.classes.len() != params.arch.num_classes {
        return Err(corrupt("class list does not match the output size"));
    }
    Ok(Checkpoint {
        params,
        config: header.config,
        classes: header.classes,
        catalog,
    })
}
