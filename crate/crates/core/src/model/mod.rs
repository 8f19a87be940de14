//! Attentive four-branch recurrent dialogue model.
//!
//! Per utterance `t`, in this order:
//!
//! 1. `a_t`  = soft attention over the context history `C_1 .. C_{t-1}`
//! 2. `C_t`  = GRU_C(C_{t-1}, S_{spk} ++ I_{t-1} ++ u_t)
//! 3. `C_t` joins the history
//! 4. every party `p`: `S_p` = GRU_SS or GRU_SL (S_p, C_t ++ u_t)
//! 5. `I_t`  = GRU_I(I_{t-1}, a_t ++ u_t)
//! 6. `E_t`  = GRU_E(E_{t-1}, C_t ++ S_{spk} ++ u_t)
//! 7. class distribution = softmax(fc2(relu(fc1(E_t)) + E_t))
//!
//! `S_{spk}` in step 2 is the current speaker's latest self state, zero on
//! first appearance. Step 4 uses GRU_SS for the speaker and GRU_SL for
//! every other party of the dialogue.

mod forward;
mod params;
mod runner;

pub use forward::{
    attention_pool, attention_scores, classify, context_step, emotion_step, forward_dialogue,
    initial_context, intra_speaker_step, self_speaker_step, AttentionTrace, DialogueGraph,
    DialogueStates, Role, StepRecord,
};
pub use params::{AttentionParams, DirectionParams, ModelParams};
pub use runner::{argmax, dialogue_graph, utterance_vars, DialogueModel, DialoguePrediction};

use alloc::format;

use crate::encoder::EmbedderKind;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Direction {
    #[default]
    Forward,
    /// Adds a reversed-order pass with its own recurrent parameters; the
    /// classifier sees `E_fwd ++ E_bwd`.
    Bidirectional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct Ablations {
    /// `a_t` is replaced by zeros.
    pub no_attention_context: bool,
    /// Zero blocks wherever a self state is consumed; self states are not updated.
    pub no_self_state: bool,
    /// Zero block for `I` in the context input; `I` is never updated.
    pub no_intra_state: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ModelConfig {
    /// Segment embedding size; utterance vectors have three times this.
    pub embedding_dim: usize,
    pub context_dim: usize,
    pub self_dim: usize,
    pub intra_dim: usize,
    pub emotion_dim: usize,
    pub attention_dim: usize,
    pub n_classes: usize,
    pub direction: Direction,
    pub ablations: Ablations,
    /// Also feed `I_t` into the emotion GRU.
    pub emotion_uses_intra: bool,
    /// Seed of the initial context state `C_0`.
    pub state_seed: u64,
    pub embedder: EmbedderKind,
    /// Seed of the stub embedder's projection.
    pub embedder_seed: u64,
    /// Flattened patch size, used by the linear embedder only.
    pub patch_len: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            embedding_dim: crate::encoder::DEFAULT_EMBEDDING_DIM,
            context_dim: 128,
            self_dim: 128,
            intra_dim: 128,
            emotion_dim: 128,
            attention_dim: 128,
            n_classes: crate::EMOTIONS.len(),
            direction: Direction::Forward,
            ablations: Ablations::default(),
            emotion_uses_intra: false,
            state_seed: 0,
            embedder_seed: 0,
            embedder: EmbedderKind::Precomputed,
            patch_len: 96 * 64,
        }
    }
}

impl ModelConfig {
    /// Small configuration used by tests and the synthetic corpus.
    pub fn small(embedding_dim: usize, hidden: usize) -> Self {
        Self {
            embedding_dim,
            context_dim: hidden,
            self_dim: hidden,
            intra_dim: hidden,
            emotion_dim: hidden,
            attention_dim: hidden,
            ..Self::default()
        }
    }

    pub fn utterance_dim(&self) -> usize {
        3 * self.embedding_dim
    }

    pub fn directions(&self) -> usize {
        match self.direction {
            Direction::Forward => 1,
            Direction::Bidirectional => 2,
        }
    }

    pub fn context_input_dim(&self) -> usize {
        self.self_dim + self.intra_dim + self.utterance_dim()
    }

    pub fn self_input_dim(&self) -> usize {
        self.context_dim + self.utterance_dim()
    }

    pub fn intra_input_dim(&self) -> usize {
        self.context_dim + self.utterance_dim()
    }

    pub fn emotion_input_dim(&self) -> usize {
        let intra = if self.emotion_uses_intra { self.intra_dim } else { 0 };
        self.context_dim + self.self_dim + intra + self.utterance_dim()
    }

    pub fn classifier_dim(&self) -> usize {
        self.emotion_dim * self.directions()
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("embedding_dim", self.embedding_dim),
            ("context_dim", self.context_dim),
            ("self_dim", self.self_dim),
            ("intra_dim", self.intra_dim),
            ("emotion_dim", self.emotion_dim),
            ("attention_dim", self.attention_dim),
            ("n_classes", self.n_classes),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, d)| *d == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if self.embedder == EmbedderKind::Linear && self.patch_len == 0 {
            return Err(Error::Config("patch_len must be positive for the linear embedder".into()));
        }
        Ok(())
    }
}
