//! Model checkpoint container.
//!
//! Layout (all integers little-endian u32, all values little-endian f64):
//!
//! ```text
//! offset 0   magic bytes "SQCP"
//! offset 4   format version (currently 1)
//! offset 8   metadata length M
//! offset 12  metadata: M bytes of JSON (family, config, normalization)
//! then       entry count N, followed by N entries:
//!              name length, name bytes (utf-8),
//!              rows, cols, rows*cols values
//! ```
//!
//! Entries appear in [`Forecaster::params`] order; restoring verifies name
//! and shape at every position, so a checkpoint never silently loads into
//! the wrong architecture.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Forecaster, Lstm, ModelFamily, RecurrentConfig, Rnn, Transformer, TransformerConfig};
use crate::data::NormalizationParams;
use crate::error::Error;
use crate::tensor::{Graph, TensorId};
use crate::Result;

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"SQCP";

/// Everything needed to rebuild the model and denormalize its outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub family: ModelFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transformer: Option<TransformerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recurrent: Option<RecurrentConfig>,
    pub norm: NormalizationParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

pub fn save_checkpoint(
    path: &Path,
    meta: &CheckpointMeta,
    g: &Graph,
    params: &[TensorId],
) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    let meta_json = serde_json::to_vec(meta)
        .map_err(|e| Error::Contract(format!("checkpoint metadata did not serialize: {e}")))?;
    buf.extend_from_slice(&(meta_json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&meta_json);
    buf.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for &p in params {
        let name = g
            .name(p)?
            .ok_or_else(|| Error::Contract("checkpoint parameters must be named".into()))?
            .to_string();
        let (rows, cols) = g.shape(p)?;
        buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.extend_from_slice(&(rows as u32).to_le_bytes());
        buf.extend_from_slice(&(cols as u32).to_le_bytes());
        for v in g.value(p)? {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path, &buf).map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Data("truncated checkpoint".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn load_checkpoint(path: &Path) -> Result<(CheckpointMeta, Vec<ParamEntry>)> {
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut c = Cursor { buf: &buf, pos: 0 };
    if c.take(4)? != MAGIC {
        return Err(Error::Data(format!(
            "{} is not a model checkpoint (bad magic)",
            path.display()
        )));
    }
    let version = c.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Data(format!(
            "unsupported checkpoint version {version}, this build reads version {CHECKPOINT_VERSION}"
        )));
    }
    let meta_len = c.u32()? as usize;
    let meta: CheckpointMeta = serde_json::from_slice(c.take(meta_len)?)
        .map_err(|e| Error::Data(format!("bad checkpoint metadata: {e}")))?;
    let n = c.u32()? as usize;
    let mut entries = Vec::with_capacity(n);
    for _ in 0..n {
        let name_len = c.u32()? as usize;
        let name = std::str::from_utf8(c.take(name_len)?)
            .map_err(|e| Error::Data(format!("bad checkpoint entry name: {e}")))?
            .to_string();
        let rows = c.u32()? as usize;
        let cols = c.u32()? as usize;
        let raw = c.take(rows * cols * 8)?;
        let data = raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        entries.push(ParamEntry {
            name,
            rows,
            cols,
            data,
        });
    }
    if c.pos != buf.len() {
        return Err(Error::Data(format!(
            "checkpoint has {} trailing bytes",
            buf.len() - c.pos
        )));
    }
    Ok((meta, entries))
}

/// Build a fresh (randomly initialized) model of the checkpointed
/// architecture; call [`restore_params`] afterwards to load the weights.
pub fn rebuild(g: &mut Graph, meta: &CheckpointMeta) -> Result<Box<dyn Forecaster>> {
    // Initial values are overwritten by restore, so any seed works here.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    match meta.family {
        ModelFamily::Transformer => {
            let cfg = meta.transformer.ok_or_else(|| {
                Error::Data("checkpoint metadata is missing the transformer config".into())
            })?;
            Ok(Box::new(Transformer::new(g, &mut rng, cfg)?))
        }
        ModelFamily::Lstm => {
            let cfg = meta.recurrent.ok_or_else(|| {
                Error::Data("checkpoint metadata is missing the recurrent config".into())
            })?;
            Ok(Box::new(Lstm::new(g, &mut rng, cfg)?))
        }
        ModelFamily::Rnn => {
            let cfg = meta.recurrent.ok_or_else(|| {
                Error::Data("checkpoint metadata is missing the recurrent config".into())
            })?;
            Ok(Box::new(Rnn::new(g, &mut rng, cfg)?))
        }
    }
}

/// Copy checkpoint entries into a freshly built model's parameters,
/// verifying name and shape at every position.
pub fn restore_params(g: &mut Graph, params: &[TensorId], entries: &[ParamEntry]) -> Result<()> {
    if params.len() != entries.len() {
        return Err(Error::Contract(format!(
            "checkpoint holds {} parameters, model has {}",
            entries.len(),
            params.len()
        )));
    }
    for (&p, e) in params.iter().zip(entries) {
        let name = g.name(p)?.unwrap_or("<unnamed>");
        if name != e.name {
            return Err(Error::Contract(format!(
                "checkpoint entry {:?} does not match model parameter {name:?}",
                e.name
            )));
        }
        if g.shape(p)? != (e.rows, e.cols) {
            return Err(Error::Contract(format!(
                "checkpoint entry {:?} has shape ({}, {}), model expects {:?}",
                e.name,
                e.rows,
                e.cols,
                g.shape(p)?
            )));
        }
        let name = e.name.clone();
        g.set_value(p, &e.data)
            .map_err(|err| Error::Contract(format!("restoring {name:?}: {err}")))?;
    }
    Ok(())
}
