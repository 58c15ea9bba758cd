//! Binary model checkpoints.
//!
//! Layout (little-endian): magic `GMCKPT01`; `u64` input, hidden and
//! embedding dims; `u64` init seed; one activation byte per layer
//! (0 = ReLU, 1 = identity); every parameter as `f64` in canonical order,
//! row-major; then the SHA-256 of all preceding bytes.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{Activation, GnnModel, GraphLayer, ModelDims};
use crate::linalg::Matrix;

const MAGIC: &[u8; 8] = b"GMCKPT01";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("checkpoint truncated")]
    Truncated,
    #[error("checkpoint checksum mismatch")]
    ChecksumMismatch,
    #[error("invalid checkpoint: {0}")]
    Invalid(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn activation_code(a: Activation) -> u8 {
    match a {
        Activation::Relu => 0,
        Activation::Identity => 1,
    }
}

fn activation_from(code: u8) -> Result<Activation, CheckpointError> {
    match code {
        0 => Ok(Activation::Relu),
        1 => Ok(Activation::Identity),
        other => Err(CheckpointError::Invalid(format!("activation code {other}"))),
    }
}

pub fn write_checkpoint(model: &GnnModel) -> Vec<u8> {
    let mut buf = Vec::with_capacity(64 + model.n_parameters() * 8);
    buf.extend_from_slice(MAGIC);
    for v in [
        model.dims.input_dim as u64,
        model.dims.hidden_dim as u64,
        model.dims.embedding_dim as u64,
        model.init_seed,
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.push(activation_code(model.layer1.activation));
    buf.push(activation_code(model.layer2.activation));
    for slice in model.parameter_slices() {
        for v in slice {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let sum = Sha256::digest(&buf);
    buf.extend_from_slice(&sum);
    buf
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], CheckpointError> {
        let end = self.pos.checked_add(n).ok_or(CheckpointError::Truncated)?;
        let out = self.bytes.get(self.pos..end).ok_or(CheckpointError::Truncated)?;
        self.pos = end;
        Ok(out)
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, CheckpointError> {
        let raw = self.take(n.checked_mul(8).ok_or(CheckpointError::Truncated)?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<GnnModel, CheckpointError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    if bytes.len() < MAGIC.len() + 32 {
        return Err(CheckpointError::Truncated);
    }
    let (body, sum) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != sum {
        return Err(CheckpointError::ChecksumMismatch);
    }
    let mut cur = Cursor {
        bytes: body,
        pos: MAGIC.len(),
    };
    let to_usize = |v: u64| usize::try_from(v).map_err(|_| CheckpointError::Invalid("dimension overflow".into()));
    let input_dim = to_usize(cur.u64()?)?;
    let hidden_dim = to_usize(cur.u64()?)?;
    let embedding_dim = to_usize(cur.u64()?)?;
    let init_seed = cur.u64()?;
    let dims = ModelDims::new(input_dim, hidden_dim, embedding_dim)
        .map_err(|e| CheckpointError::Invalid(e.to_string()))?;
    let act1 = activation_from(cur.take(1)?[0])?;
    let act2 = activation_from(cur.take(1)?[0])?;
    let w1 = cur.f64s(hidden_dim * input_dim)?;
    let b1 = cur.f64s(hidden_dim)?;
    let w2 = cur.f64s(embedding_dim * hidden_dim)?;
    let b2 = cur.f64s(embedding_dim)?;
    let head_weight = cur.f64s(embedding_dim)?;
    let head_bias = cur.f64s(1)?[0];
    if cur.pos != body.len() {
        return Err(CheckpointError::Invalid("trailing bytes".into()));
    }
    Ok(GnnModel {
        layer1: GraphLayer {
            weight: Matrix::from_vec(hidden_dim, input_dim, w1),
            bias: b1,
            activation: act1,
        },
        layer2: GraphLayer {
            weight: Matrix::from_vec(embedding_dim, hidden_dim, w2),
            bias: b2,
            activation: act2,
        },
        head_weight,
        head_bias,
        dims,
        init_seed,
    })
}

pub fn save_checkpoint(model: &GnnModel, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
    fs::write(path, write_checkpoint(model))?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<GnnModel, CheckpointError> {
    read_checkpoint(&fs::read(path)?)
}
