//! Versioned binary checkpoints.
//!
//! ```text
//! "CXRT"                magic
//! u32                   format version (1)
//! u32 + bytes           graph config as key=value text
//! u32                   tensor count
//! per tensor:
//!   u32 + bytes         name
//!   u32                 rank
//!   u64 * rank          dimensions
//!   f64 * product       values
//! ```
//!
//! All integers and floats are little-endian.

use std::path::Path;

use super::config::{graph_from_text, graph_to_text, GraphConfig};
use super::graph::ParamStore;
use crate::error::{CoreError, Result};
use crate::io::write_atomic;
use crate::scalar::Real;
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"CXRT";
pub const FORMAT_VERSION: u32 = 1;

pub fn encode_checkpoint<T: Real>(config: &GraphConfig, params: &ParamStore<T>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let text = graph_to_text(config);
    out.extend_from_slice(&(text.len() as u32).to_le_bytes());
    out.extend_from_slice(text.as_bytes());
    out.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for (name, t) in params.iter() {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in t.data() {
            out.extend_from_slice(&v.as_f64().to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(CoreError::Format(format!(
                "checkpoint truncated at byte {} (wanted {} more)",
                self.pos, n
            ))),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| CoreError::Format("checkpoint string is not UTF-8".into()))
    }
}

pub fn decode_checkpoint<T: Real>(bytes: &[u8]) -> Result<(GraphConfig, ParamStore<T>)> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(CoreError::Format("not a checkpoint: bad magic bytes".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(CoreError::Format(format!("unsupported checkpoint version {}", version)));
    }
    let config = graph_from_text(&r.string()?)?;
    let count = r.u32()? as usize;
    let mut names = Vec::with_capacity(count);
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        names.push(r.string()?);
        let rank = r.u32()? as usize;
        let shape = (0..rank).map(|_| r.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let n: usize = shape.iter().product();
        let raw = r.take(n.checked_mul(8).ok_or_else(|| CoreError::Format("tensor too large".into()))?)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("8 bytes"))))
            .collect();
        tensors.push(Tensor::from_vec(&shape, data)?);
    }
    if r.pos != bytes.len() {
        return Err(CoreError::Format(format!(
            "{} trailing bytes after checkpoint",
            bytes.len() - r.pos
        )));
    }
    Ok((config, ParamStore::new(names, tensors)))
}

pub fn save_checkpoint<T: Real>(path: &Path, config: &GraphConfig, params: &ParamStore<T>) -> Result<()> {
    write_atomic(path, &encode_checkpoint(config, params))?;
    Ok(())
}

pub fn load_checkpoint<T: Real>(path: &Path) -> Result<(GraphConfig, ParamStore<T>)> {
    decode_checkpoint(&std::fs::read(path)?)
}
