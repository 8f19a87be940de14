//! Deterministic synthetic corpus for overfitting checks and demos.
//!
//! Segment embeddings are Gaussian, pooled by the statistical unit into
//! `u_t`; each label is the argmax of fixed linear probes applied to `u_t`.
//! Samples are rounded to `f32` so the corpus survives the container format
//! unchanged.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dialogue::{Dialogue, Turn, UtteranceInput};
use crate::encoder::{statistical_unit, SegmentEmbedding};
use crate::model::argmax;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SyntheticSpec {
    pub dialogues: usize,
    pub turns: usize,
    pub embedding_dim: usize,
    pub n_classes: usize,
    /// Segments per utterance are drawn from `1..=max_segments`.
    pub max_segments: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            dialogues: 8,
            turns: 6,
            embedding_dim: 8,
            n_classes: 7,
            max_segments: 4,
            seed: 2024,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub dialogues: Vec<Dialogue>,
    /// `n_classes` probes of length `3 * embedding_dim`.
    pub probes: Vec<Vec<f64>>,
    /// Segment embeddings behind every utterance, `[dialogue][turn][segment]`.
    pub segments: Vec<Vec<Vec<SegmentEmbedding>>>,
}

impl SyntheticCorpus {
    pub fn generate(spec: &SyntheticSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let du = 3 * spec.embedding_dim;
        let gauss = |rng: &mut ChaCha8Rng| -> f64 {
            let x: f64 = StandardNormal.sample(rng);
            x as f32 as f64
        };
        let probes: Vec<Vec<f64>> = (0..spec.n_classes)
            .map(|_| (0..du).map(|_| gauss(&mut rng)).collect())
            .collect();
        let mut dialogues = Vec::with_capacity(spec.dialogues);
        let mut segments = Vec::with_capacity(spec.dialogues);
        for d in 0..spec.dialogues {
            let n_parties = 2 + d % 2;
            let mut turns = Vec::with_capacity(spec.turns);
            let mut segs = Vec::with_capacity(spec.turns);
            for t in 0..spec.turns {
                let speaker = if t < n_parties { t } else { rng.random_range(0..n_parties) };
                let n_seg = rng.random_range(1..=spec.max_segments.max(1));
                let embs: Vec<SegmentEmbedding> = (0..n_seg)
                    .map(|_| SegmentEmbedding((0..spec.embedding_dim).map(|_| gauss(&mut rng)).collect()))
                    .collect();
                let u = statistical_unit(&embs).expect("non-empty, equal dims");
                let scores: Vec<f64> = probes
                    .iter()
                    .map(|p| p.iter().zip(u.as_slice()).map(|(a, b)| a * b).sum())
                    .collect();
                turns.push(Turn {
                    speaker: format!("spk{speaker}"),
                    input: UtteranceInput::Vector(u),
                    label: Some(argmax(&scores)),
                });
                segs.push(embs);
            }
            dialogues.push(Dialogue {
                id: format!("synth{d:02}"),
                turns,
            });
            segments.push(segs);
        }
        Self {
            dialogues,
            probes,
            segments,
        }
    }
}
