//! `GCF1` model checkpoints.
//!
//! Layout, all little-endian:
//!
//! ```text
//! "GCF1" | u16 version | u32 classes | u32 dim | u64 step_count
//!        | f64 learning_rate | f64 l2 | u64 seed | u8 optimizer | f64 init_scale
//!        | classes * dim f64 weights, row-major
//! ```
//!
//! Optimizer moments are not stored; a loaded model is for scoring and
//! evaluation, and resumes with fresh moments if trained further.

use gencode_core::scorer::{Hyper, ModelState, Optimizer};
use std::io::{self, Read, Write};
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"GCF1";
pub const VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a GCF1 checkpoint")]
    BadMagic,
    #[error("unsupported checkpoint version {0} (expected {VERSION})")]
    Version(u16),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn write_checkpoint(mut out: impl Write, model: &ModelState) -> io::Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(model.classes as u32).to_le_bytes())?;
    out.write_all(&(model.dim as u32).to_le_bytes())?;
    out.write_all(&model.step_count.to_le_bytes())?;
    out.write_all(&model.hyper.learning_rate.to_le_bytes())?;
    out.write_all(&model.hyper.l2.to_le_bytes())?;
    out.write_all(&model.hyper.seed.to_le_bytes())?;
    out.write_all(&[match model.hyper.optimizer {
        Optimizer::Adam => 0,
        Optimizer::Sgd => 1,
    }])?;
    out.write_all(&model.hyper.init_scale.to_le_bytes())?;
    let mut buf = Vec::with_capacity(model.weights.len() * 8);
    for w in &model.weights {
        buf.extend_from_slice(&w.to_le_bytes());
    }
    out.write_all(&buf)?;
    out.flush()
}

fn take<const N: usize>(r: &mut impl Read) -> Result<[u8; N], CheckpointError> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => CheckpointError::Corrupt("truncated header".into()),
        _ => CheckpointError::Io(e),
    })?;
    Ok(b)
}

pub fn read_checkpoint(mut r: impl Read) -> Result<ModelState, CheckpointError> {
    if &take::<4>(&mut r)? != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = u16::from_le_bytes(take(&mut r)?);
    if version != VERSION {
        return Err(CheckpointError::Version(version));
    }
    let classes = u32::from_le_bytes(take(&mut r)?) as usize;
    let dim = u32::from_le_bytes(take(&mut r)?) as usize;
    let step_count = u64::from_le_bytes(take(&mut r)?);
    let learning_rate = f64::from_le_bytes(take(&mut r)?);
    let l2 = f64::from_le_bytes(take(&mut r)?);
    let seed = u64::from_le_bytes(take(&mut r)?);
    let optimizer = match take::<1>(&mut r)?[0] {
        0 => Optimizer::Adam,
        1 => Optimizer::Sgd,
        other => return Err(CheckpointError::Corrupt(format!("optimizer tag {other}"))),
    };
    let init_scale = f64::from_le_bytes(take(&mut r)?);
    let hyper = Hyper { learning_rate, l2, seed, optimizer, init_scale: 0.0 };
    let mut model = ModelState::new(classes, dim, hyper).map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
    model.hyper.init_scale = init_scale;
    model.step_count = step_count;
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != classes * dim * 8 {
        return Err(CheckpointError::Corrupt(format!("expected {} weight bytes, found {}", classes * dim * 8, body.len())));
    }
    for (w, chunk) in model.weights.iter_mut().zip(body.chunks_exact(8)) {
        *w = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
    }
    Ok(model)
}
