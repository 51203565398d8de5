//! Binary model checkpoints.
//!
//! Layout: the 8-byte magic `PDBCKPT\0`, a little-endian `u32` format version,
//! a little-endian `u64` header length, a UTF-8 JSON header, then every tensor
//! of the weights, the Adam first moments and the Adam second moments (in that
//! order, each in header order) as row-major little-endian `f64`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::activation::ActivationRegistry;
use super::adam::AdamState;
use super::network::{DcaeParams, SeedUse};
use super::params::{Architecture, ParamSet};

const MAGIC: &[u8; 8] = b"PDBCKPT\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    architecture: Architecture,
    adam_step: u64,
    lineage: Vec<SeedUse>,
    tensors: Vec<TensorEntry>,
}

pub fn to_bytes(model: &DcaeParams) -> Vec<u8> {
    let arch = model.architecture();
    let header = Header {
        architecture: arch.clone(),
        adam_step: model.adam.t,
        lineage: model.lineage.clone(),
        tensors: model
            .weights
            .layout(&arch.channels)
            .into_iter()
            .map(|(name, shape)| TensorEntry { name, shape })
            .collect(),
    };
    let header = serde_json::to_vec(&header).expect("header serializes");
    let n = model.weights.len();
    let mut out = Vec::with_capacity(20 + header.len() + 3 * 8 * n);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    for set in [&model.weights, &model.adam.m, &model.adam.v] {
        for tensor in set.slices() {
            for v in tensor {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

fn take<'a>(bytes: &mut &'a [u8], n: usize, what: &str) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(Error::Checkpoint(format!("truncated while reading {what}")));
    }
    let (head, tail) = bytes.split_at(n);
    *bytes = tail;
    Ok(head)
}

fn fill_from(set: &mut ParamSet, bytes: &mut &[u8]) -> Result<()> {
    for tensor in set.slices_mut() {
        let raw = take(bytes, tensor.len() * 8, "tensor data")?;
        for (v, chunk) in tensor.iter_mut().zip(raw.chunks_exact(8)) {
            *v = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        }
    }
    Ok(())
}

pub fn from_bytes(bytes: &[u8], registry: &ActivationRegistry) -> Result<DcaeParams> {
    let mut rest = bytes;
    if take(&mut rest, 8, "magic")? != MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file".into()));
    }
    let version = u32::from_le_bytes(take(&mut rest, 4, "version")?.try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported format version {version}")));
    }
    let header_len = u64::from_le_bytes(take(&mut rest, 8, "header length")?.try_into().expect("8 bytes"));
    let header: Header = serde_json::from_slice(take(&mut rest, header_len as usize, "header")?)
        .map_err(|e| Error::Checkpoint(format!("bad header: {e}")))?;
    header.architecture.validate()?;

    let mut weights = ParamSet::zeros(&header.architecture);
    let layout = weights.layout(&header.architecture.channels);
    let declared: Vec<(String, Vec<usize>)> =
        header.tensors.into_iter().map(|t| (t.name, t.shape)).collect();
    if layout != declared {
        return Err(Error::Checkpoint("tensor table does not match the architecture".into()));
    }
    let mut adam = AdamState::new(&header.architecture);
    adam.t = header.adam_step;
    fill_from(&mut weights, &mut rest)?;
    fill_from(&mut adam.m, &mut rest)?;
    fill_from(&mut adam.v, &mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", rest.len())));
    }
    DcaeParams::from_parts(header.architecture, weights, adam, header.lineage, registry)
}

pub fn save(model: &DcaeParams, path: &Path) -> Result<()> {
    fs::write(path, to_bytes(model)).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))
}

pub fn load(path: &Path) -> Result<DcaeParams> {
    let bytes = fs::read(path).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
    from_bytes(&bytes, &ActivationRegistry::default())
}
