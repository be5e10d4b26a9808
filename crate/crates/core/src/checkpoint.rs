//! Binary snapshot format.
//!
//! Layout (little-endian): 8-byte magic `QGSADL01`, `u32` version, `u32`
//! model code (`sqg = 0`, `euler2d = 1`, `clm1d = 2`), `u32` n, `f64` t,
//! then `n×n` (planar, row-major with `x₁` fastest) or `n` `f64` values.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use crate::models::{ModelTag, State};
use crate::spectral::{Field1D, Field2D, Grid2D, SpectralError};

pub const MAGIC: &[u8; 8] = b"QGSADL01";
pub const VERSION: u32 = 1;
const HEADER: usize = 8 + 4 + 4 + 4 + 8;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("bad magic {found:?}; not a checkpoint file")]
    BadMagic { found: Vec<u8> },
    #[error("unsupported checkpoint version {found} (expected {VERSION})")]
    Version { found: u32 },
    #[error("unknown model code {0}")]
    UnknownModel(u32),
    #[error("truncated checkpoint: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("checkpoint has {extra} trailing bytes")]
    Trailing { extra: usize },
    #[error("state does not match model {model}")]
    Mismatch { model: ModelTag },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: ModelTag,
    pub t: f64,
    pub state: State,
}

pub fn encode(state: &State, t: f64, model: ModelTag) -> Result<Vec<u8>, CheckpointError> {
    if model.is_planar() != matches!(state, State::Plane(_)) {
        return Err(CheckpointError::Mismatch { model });
    }
    let values = state.values();
    let mut out = Vec::with_capacity(HEADER + 8 * values.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&model.code().to_le_bytes());
    out.extend_from_slice(&(state.n() as u32).to_le_bytes());
    out.extend_from_slice(&t.to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
    if bytes.len() < 8 || &bytes[..8] != MAGIC {
        return Err(CheckpointError::BadMagic {
            found: bytes[..bytes.len().min(8)].to_vec(),
        });
    }
    if bytes.len() < HEADER {
        return Err(CheckpointError::Truncated {
            expected: HEADER,
            found: bytes.len(),
        });
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let version = u32_at(8);
    if version != VERSION {
        return Err(CheckpointError::Version { found: version });
    }
    let code = u32_at(12);
    let model = ModelTag::from_code(code).ok_or(CheckpointError::UnknownModel(code))?;
    let n = u32_at(16) as usize;
    let t = f64::from_le_bytes(bytes[20..28].try_into().expect("8 bytes"));
    let count = if model.is_planar() { n * n } else { n };
    let expected = HEADER + 8 * count;
    if bytes.len() < expected {
        return Err(CheckpointError::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(CheckpointError::Trailing {
            extra: bytes.len() - expected,
        });
    }
    let values: Vec<f64> = bytes[HEADER..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let state = if model.is_planar() {
        State::Plane(Field2D::new(Grid2D::new(n)?, values)?)
    } else {
        State::Line(Field1D::new(values)?)
    };
    Ok(Checkpoint { model, t, state })
}

pub fn write_checkpoint(path: &Path, state: &State, t: f64, model: ModelTag) -> Result<(), CheckpointError> {
    let bytes = encode(state, t, model)?;
    let io_err = |source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut f = fs::File::create(path).map_err(io_err)?;
    f.write_all(&bytes).map_err(io_err)?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let bytes = fs::read(path).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode(&bytes)
}
