//! "CAFE" binary containers for segment embeddings and patches.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic "CAFE" | u8 version | u8 kind | u16 reserved = 0 | u32 count
//! kind 1: u32 dim            then count * dim        f32 values
//! kind 2: u32 rows, u32 cols then count * rows * cols f32 values
//! ```
//!
//! Kind 3 (checkpoints) shares the first 12 bytes; see [`crate::checkpoint`].

use std::fs;
use std::path::Path;

use convo_affect_core::encoder::SegmentEmbedding;
use convo_affect_core::frontend::SegmentPatch;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CAFE";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Kind {
    Embeddings = 1,
    Patches = 2,
    Checkpoint = 3,
}

impl Kind {
    fn from_u8(b: u8) -> Result<Self> {
        match b {
            1 => Ok(Kind::Embeddings),
            2 => Ok(Kind::Patches),
            3 => Ok(Kind::Checkpoint),
            other => Err(Error::Format(format!("unknown container kind {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub version: u8,
    pub kind: Kind,
    pub count: u32,
}

pub fn write_header(out: &mut Vec<u8>, kind: Kind, count: u32) {
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(kind as u8);
    out.extend_from_slice(&0u16.to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());
}

/// Cursor over a byte buffer; every short read is a format error.
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Format(format!("truncated: wanted {n} bytes at offset {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| Error::Format("size overflow".into()))?)?;
        Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
    }

    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::Format("size overflow".into()))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }

    pub fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Format(format!("{} trailing bytes", self.buf.len() - self.pos)));
        }
        Ok(())
    }

    pub fn header(&mut self) -> Result<Header> {
        let magic = self.take(4)?;
        if magic != MAGIC {
            return Err(Error::Format(format!("bad magic {:?}", String::from_utf8_lossy(magic))));
        }
        let version = self.u8()?;
        if version != VERSION {
            return Err(Error::Version {
                found: version,
                expected: VERSION,
            });
        }
        let kind = Kind::from_u8(self.u8()?)?;
        if self.u16()? != 0 {
            return Err(Error::Format("reserved field is not zero".into()));
        }
        let count = self.u32()?;
        Ok(Header { version, kind, count })
    }
}

/// Decoded payload of an embeddings or patches container.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Embeddings { dim: usize, data: Vec<f32> },
    Patches { rows: usize, cols: usize, data: Vec<f32> },
}

impl Payload {
    pub fn count(&self) -> usize {
        match self {
            Payload::Embeddings { dim, data } => data.len().checked_div(*dim).unwrap_or(0),
            Payload::Patches { rows, cols, data } => data.len().checked_div(rows * cols).unwrap_or(0),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let data = match self {
            Payload::Embeddings { dim, data } => {
                write_header(&mut out, Kind::Embeddings, self.count() as u32);
                out.extend_from_slice(&(*dim as u32).to_le_bytes());
                data
            }
            Payload::Patches { rows, cols, data } => {
                write_header(&mut out, Kind::Patches, self.count() as u32);
                out.extend_from_slice(&(*rows as u32).to_le_bytes());
                out.extend_from_slice(&(*cols as u32).to_le_bytes());
                data
            }
        };
        out.reserve(data.len() * 4);
        for v in data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(buf: &[u8]) -> Result<Self> {
        let mut r = Reader::new(buf);
        let h = r.header()?;
        let count = h.count as usize;
        let payload = match h.kind {
            Kind::Embeddings => {
                let dim = r.u32()? as usize;
                let data = r.f32s(count * dim)?;
                Payload::Embeddings { dim, data }
            }
            Kind::Patches => {
                let rows = r.u32()? as usize;
                let cols = r.u32()? as usize;
                let data = r.f32s(count * rows * cols)?;
                Payload::Patches { rows, cols, data }
            }
            Kind::Checkpoint => return Err(Error::Format("checkpoint container where features were expected".into())),
        };
        r.finish()?;
        Ok(payload)
    }

    pub fn from_embeddings(embs: &[SegmentEmbedding]) -> Result<Self> {
        let dim = embs.first().map_or(0, |e| e.dim());
        let mut data = Vec::with_capacity(embs.len() * dim);
        for e in embs {
            if e.dim() != dim {
                return Err(Error::Dim {
                    expected: dim,
                    found: e.dim(),
                });
            }
            data.extend(e.0.iter().map(|&v| v as f32));
        }
        Ok(Payload::Embeddings { dim, data })
    }

    pub fn from_patches(patches: &[SegmentPatch]) -> Result<Self> {
        let (rows, cols) = patches.first().map_or((0, 0), |p| (p.rows(), p.cols()));
        let mut data = Vec::with_capacity(patches.len() * rows * cols);
        for p in patches {
            if (p.rows(), p.cols()) != (rows, cols) {
                return Err(Error::Dim {
                    expected: rows * cols,
                    found: p.rows() * p.cols(),
                });
            }
            data.extend(p.data().iter().map(|&v| v as f32));
        }
        Ok(Payload::Patches { rows, cols, data })
    }

    /// Embeddings as `f64`, checking `dim` against the run's `D_emb`.
    pub fn embeddings(&self, expected_dim: usize) -> Result<Vec<SegmentEmbedding>> {
        match self {
            Payload::Embeddings { dim, data } => {
                if *dim != expected_dim {
                    return Err(Error::Dim {
                        expected: expected_dim,
                        found: *dim,
                    });
                }
                Ok(data
                    .chunks_exact(*dim)
                    .map(|c| SegmentEmbedding(c.iter().map(|&v| v as f64).collect()))
                    .collect())
            }
            Payload::Patches { .. } => Err(Error::Data("expected an embeddings container, found patches".into())),
        }
    }

    pub fn patches(&self, expected_rows: usize, expected_cols: usize) -> Result<Vec<SegmentPatch>> {
        match self {
            Payload::Patches { rows, cols, data } => {
                if (*rows, *cols) != (expected_rows, expected_cols) {
                    return Err(Error::Dim {
                        expected: expected_rows * expected_cols,
                        found: rows * cols,
                    });
                }
                data.chunks_exact(rows * cols)
                    .map(|c| Ok(SegmentPatch::new(*rows, *cols, c.iter().map(|&v| v as f64).collect())?))
                    .collect()
            }
            Payload::Embeddings { .. } => Err(Error::Data("expected a patches container, found embeddings".into())),
        }
    }
}

pub fn write_container(path: &Path, payload: &Payload) -> Result<()> {
    fs::write(path, payload.encode()).map_err(|e| Error::io(path, e))
}

pub fn read_container(path: &Path) -> Result<Payload> {
    let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
    Payload::decode(&buf).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_embeddings(path: &Path, embs: &[SegmentEmbedding]) -> Result<()> {
    write_container(path, &Payload::from_embeddings(embs)?)
}

pub fn read_embeddings(path: &Path, expected_dim: usize) -> Result<Vec<SegmentEmbedding>> {
    read_container(path)?.embeddings(expected_dim)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embeddings_round_trip() {
        let data: Vec<f32> = (0..5 * 128).map(|i| (i as f32 * 0.37).sin()).collect();
        let p = Payload::Embeddings { dim: 128, data };
        let bytes = p.encode();
        assert_eq!(bytes.len(), 16 + 5 * 128 * 4);
        assert_eq!(&bytes[..4], b"CAFE");
        assert_eq!(Payload::decode(&bytes).unwrap(), p);
    }

    #[test]
    fn patches_round_trip() {
        let p = Payload::Patches {
            rows: 2,
            cols: 3,
            data: vec![0.5, -1.0, 2.0, 3.5, 0.0, f32::MIN_POSITIVE, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        };
        assert_eq!(p.count(), 2);
        assert_eq!(Payload::decode(&p.encode()).unwrap(), p);
    }

    #[test]
    fn bad_magic_version_and_truncation() {
        let mut bytes = Payload::Embeddings { dim: 2, data: vec![1.0, 2.0] }.encode();
        assert!(matches!(Payload::decode(&bytes[..bytes.len() - 1]), Err(Error::Format(_))));
        bytes[4] = 9;
        assert!(matches!(Payload::decode(&bytes), Err(Error::Version { found: 9, .. })));
        bytes[..4].copy_from_slice(b"XXXX");
        assert!(matches!(Payload::decode(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn dim_checked_against_run() {
        let p = Payload::Embeddings { dim: 64, data: vec![0.0; 64] };
        assert!(matches!(p.embeddings(128), Err(Error::Dim { expected: 128, found: 64 })));
    }
}
