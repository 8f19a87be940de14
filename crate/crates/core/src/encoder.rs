//! Segment embedders and the statistical pooling unit.
//!
//! An utterance is a list of segment patches. Each patch becomes a `D_emb`
//! vector through an [`Embedder`]; the statistical unit then reduces the `L`
//! vectors per coordinate to `avg ++ max ++ min`, the `3 * D_emb` utterance
//! vector fed to the dialogue model.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::frontend::SegmentPatch;
use crate::numerics::{Dense, Reduce, Shape, Tape, Tensor, Var};
use crate::{Error, Result};

pub const DEFAULT_EMBEDDING_DIM: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentEmbedding(pub Vec<f64>);

impl SegmentEmbedding {
    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// `avg ++ max ++ min` of an utterance's segment embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceVector(pub Vec<f64>);

impl UtteranceVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    fn block(&self, i: usize) -> &[f64] {
        let d = self.0.len() / 3;
        &self.0[i * d..(i + 1) * d]
    }

    pub fn avg(&self) -> &[f64] {
        self.block(0)
    }

    pub fn max(&self) -> &[f64] {
        self.block(1)
    }

    pub fn min(&self) -> &[f64] {
        self.block(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum EmbedderKind {
    /// Embeddings come from external containers; nothing to compute.
    Precomputed,
    /// Fixed seeded Gaussian projection followed by `tanh`.
    Stub,
    /// Trainable affine projection, optimized with the dialogue model.
    Linear,
}

/// Seeded random projection: `tanh(P x)` with `P` entries drawn from
/// `N(0, sigma^2)`, `sigma = 1 / sqrt(patch_len)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StubEmbedder {
    seed: u64,
    dim: usize,
    patch_len: usize,
    projection: Vec<f64>,
}

impl StubEmbedder {
    pub fn new(seed: u64, dim: usize, patch_len: usize) -> Self {
        let sigma = 1.0 / libm::sqrt(patch_len as f64);
        let normal = Normal::new(0.0, sigma).expect("finite positive sigma");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let projection = (0..dim * patch_len).map(|_| normal.sample(&mut rng)).collect();
        Self {
            seed,
            dim,
            patch_len,
            projection,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn embed(&self, patch: &SegmentPatch) -> Result<SegmentEmbedding> {
        let x = patch.data();
        if x.len() != self.patch_len {
            return Err(Error::Dim {
                expected: self.patch_len,
                found: x.len(),
            });
        }
        Ok(SegmentEmbedding(
            self.projection
                .chunks(self.patch_len)
                .map(|row| libm::tanh(row.iter().zip(x).map(|(p, v)| p * v).sum()))
                .collect(),
        ))
    }
}

pub enum Embedder<'a> {
    Precomputed,
    Stub(&'a StubEmbedder),
    Linear(&'a Dense),
}

/// Embeds each patch. Precomputed mode has nothing to run and reports
/// [`Error::ModeMismatch`].
pub fn embed_segments(patches: &[SegmentPatch], embedder: &Embedder<'_>) -> Result<Vec<SegmentEmbedding>> {
    if patches.is_empty() {
        return Err(Error::EmptyUtterance);
    }
    match embedder {
        Embedder::Precomputed => Err(Error::ModeMismatch(
            "precomputed embeddings are loaded from containers, not computed from patches",
        )),
        Embedder::Stub(stub) => patches.iter().map(|p| stub.embed(p)).collect(),
        Embedder::Linear(layer) => patches.iter().map(|p| linear_embed(layer, p)).collect(),
    }
}

fn linear_embed(layer: &Dense, patch: &SegmentPatch) -> Result<SegmentEmbedding> {
    let x = patch.data();
    let cols = layer.input_size();
    if x.len() != cols {
        return Err(Error::Dim {
            expected: cols,
            found: x.len(),
        });
    }
    Ok(SegmentEmbedding(
        layer
            .w
            .data()
            .chunks(cols)
            .zip(layer.b.data())
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect(),
    ))
}

/// Per-coordinate average, maximum and minimum, concatenated in that order.
pub fn statistical_unit(embs: &[SegmentEmbedding]) -> Result<UtteranceVector> {
    let first = embs.first().ok_or(Error::EmptyUtterance)?;
    let d = first.dim();
    if let Some(bad) = embs.iter().find(|e| e.dim() != d) {
        return Err(Error::Dim {
            expected: d,
            found: bad.dim(),
        });
    }
    let mut out = alloc::vec![0.0; 3 * d];
    out[d..2 * d].copy_from_slice(&first.0);
    out[2 * d..].copy_from_slice(&first.0);
    for e in embs {
        for (j, &v) in e.0.iter().enumerate() {
            out[j] += v;
            if v > out[d + j] {
                out[d + j] = v;
            }
            if v < out[2 * d + j] {
                out[2 * d + j] = v;
            }
        }
    }
    let inv = 1.0 / embs.len() as f64;
    out[..d].iter_mut().for_each(|v| *v *= inv);
    Ok(UtteranceVector(out))
}

/// Differentiable statistical unit over `D x 1` embedding columns.
///
/// Max and min route gradient to the lowest segment index on ties.
pub fn statistical_unit_on_tape(tape: &mut Tape<'_>, embs: &[Var]) -> Result<Var> {
    if embs.is_empty() {
        return Err(Error::EmptyUtterance);
    }
    let rows: Vec<Var> = embs.iter().map(|&e| tape.transpose(e)).collect();
    let stacked = tape.concat(&rows)?;
    let avg = tape.reduce_rows(stacked, Reduce::Mean)?;
    let max = tape.reduce_rows(stacked, Reduce::Max)?;
    let min = tape.reduce_rows(stacked, Reduce::Min)?;
    tape.concat(&[avg, max, min])
}

/// Linear embedder plus statistical unit on a tape: the utterance vector
/// for the "no pretrained embedder" configuration.
pub fn pool_patches_on_tape(tape: &mut Tape<'_>, layer: &Dense<Var>, patches: &[SegmentPatch]) -> Result<Var> {
    let mut embs = Vec::with_capacity(patches.len());
    for p in patches {
        let x = tape.constant(Tensor::new(Shape::col(p.data().len()), p.data().to_vec()));
        embs.push(layer.forward(tape, x)?);
    }
    statistical_unit_on_tape(tape, &embs)
}
