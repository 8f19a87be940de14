//! Checkpoint files: a kind-3 CAFE container.
//!
//! ```text
//! CAFE header (count = tensor count)
//! u32 json_len | json header {format, model, epoch, metric}
//! per tensor: u16 name_len | name | u32 rows | u32 cols | rows*cols f64
//! ```
//!
//! Tensors are stored as `f64`, the precision the model trains in, so a
//! round-trip reproduces every parameter bit for bit.

use std::fs;
use std::path::Path;

use convo_affect_core::model::{DialogueModel, ModelConfig, ModelParams};
use convo_affect_core::numerics::Shape;
use convo_affect_core::train::Checkpoint;
use serde::{Deserialize, Serialize};

use crate::container::{write_header, Kind, Reader};
use crate::error::{Error, Result};

const TENSOR_FORMAT: &str = "f64";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonHeader {
    format: String,
    model: ModelConfig,
    epoch: usize,
    metric: f64,
}

pub fn encode(ckpt: &Checkpoint) -> Result<Vec<u8>> {
    let named = ckpt.model.params.named();
    let header = JsonHeader {
        format: TENSOR_FORMAT.into(),
        model: ckpt.model.config.clone(),
        epoch: ckpt.epoch,
        metric: ckpt.metric,
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Format(e.to_string()))?;
    let mut out = Vec::new();
    write_header(&mut out, Kind::Checkpoint, named.len() as u32);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for (name, t) in named {
        let s = t.shape();
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(s.rows as u32).to_le_bytes());
        out.extend_from_slice(&(s.cols as u32).to_le_bytes());
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode(buf: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader::new(buf);
    let h = r.header()?;
    if h.kind != Kind::Checkpoint {
        return Err(Error::Format(format!("expected a checkpoint container, found {:?}", h.kind)));
    }
    let json_len = r.u32()? as usize;
    let header: JsonHeader =
        serde_json::from_slice(r.take(json_len)?).map_err(|e| Error::Format(format!("checkpoint header: {e}")))?;
    if header.format != TENSOR_FORMAT {
        return Err(Error::Format(format!("unsupported tensor format {:?}", header.format)));
    }
    let mut params = ModelParams::zeros(&header.model)?;
    let expected: Vec<(String, Shape)> = params.named().into_iter().map(|(n, t)| (n, t.shape())).collect();
    if h.count as usize != expected.len() {
        return Err(Error::Format(format!(
            "checkpoint holds {} tensors, its config implies {}",
            h.count,
            expected.len()
        )));
    }
    for ((name, shape), slot) in expected.iter().zip(params.tensors_mut()) {
        let len = r.u16()? as usize;
        let found = std::str::from_utf8(r.take(len)?).map_err(|_| Error::Format("tensor name is not UTF-8".into()))?;
        if found != name {
            return Err(Error::Format(format!("expected tensor {name}, found {found}")));
        }
        let s = Shape::new(r.u32()? as usize, r.u32()? as usize);
        if s != *shape {
            return Err(Error::Format(format!("tensor {name} has shape {s}, expected {shape}")));
        }
        slot.data_mut().copy_from_slice(&r.f64s(s.len())?);
    }
    r.finish()?;
    Ok(Checkpoint {
        model: DialogueModel::from_parts(header.model, params)?,
        epoch: header.epoch,
        metric: header.metric,
    })
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    fs::write(path, encode(ckpt)?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use convo_affect_core::model::Direction;

    fn sample() -> Checkpoint {
        let cfg = ModelConfig {
            direction: Direction::Bidirectional,
            ..ModelConfig::small(3, 4)
        };
        Checkpoint {
            model: DialogueModel::new(cfg, 11).unwrap(),
            epoch: 7,
            metric: 0.1 + 0.2,
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let c = sample();
        let bytes = encode(&c).unwrap();
        let back = decode(&bytes).unwrap();
        assert_eq!(back, c);
        assert_eq!(encode(&back).unwrap(), bytes);
    }

    #[test]
    fn truncation_is_a_format_error() {
        let bytes = encode(&sample()).unwrap();
        for cut in [0, 5, 12, 20, bytes.len() / 2, bytes.len() - 1] {
            assert!(matches!(decode(&bytes[..cut]), Err(Error::Format(_))), "cut at {cut}");
        }
    }

    #[test]
    fn version_mismatch() {
        let mut bytes = encode(&sample()).unwrap();
        bytes[4] = 2;
        assert!(matches!(decode(&bytes), Err(Error::Version { found: 2, expected: 1 })));
    }
}
