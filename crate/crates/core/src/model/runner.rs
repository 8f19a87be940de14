use alloc::vec::Vec;

use super::forward::{forward_dialogue, AttentionTrace, DialogueGraph};
use super::params::ModelParams;
use super::ModelConfig;
use crate::dialogue::{Dialogue, UtteranceInput};
use crate::encoder::pool_patches_on_tape;
use crate::numerics::{Tape, Tensor, Var};
use crate::{Error, Result};

/// Places each turn's utterance vector on the tape, running the linear
/// embedder and statistical unit for patch inputs.
pub fn utterance_vars(
    tape: &mut Tape<'_>,
    cfg: &ModelConfig,
    params: &ModelParams<Var>,
    dialogue: &Dialogue,
) -> Result<Vec<Var>> {
    dialogue
        .turns
        .iter()
        .map(|turn| match &turn.input {
            UtteranceInput::Vector(v) => {
                if v.dim() != cfg.utterance_dim() {
                    return Err(Error::Dim {
                        expected: cfg.utterance_dim(),
                        found: v.dim(),
                    });
                }
                Ok(tape.constant(Tensor::column(v.0.clone())))
            }
            UtteranceInput::Patches(patches) => {
                let layer = params.embedder.as_ref().ok_or(Error::ModeMismatch(
                    "patch input needs the linear embedder; configure embedder = linear",
                ))?;
                pool_patches_on_tape(tape, layer, patches)
            }
        })
        .collect()
}

/// Builds the full graph for one dialogue on `tape`.
pub fn dialogue_graph(
    tape: &mut Tape<'_>,
    cfg: &ModelConfig,
    params: &ModelParams<Var>,
    dialogue: &Dialogue,
) -> Result<DialogueGraph> {
    if dialogue.is_empty() {
        return Err(Error::EmptyDialogue);
    }
    let (parties, n_parties) = dialogue.parties()?;
    let utts = utterance_vars(tape, cfg, params, dialogue)?;
    forward_dialogue(tape, cfg, params, &utts, &parties, n_parties)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DialoguePrediction {
    /// Class distribution per turn.
    pub probs: Vec<Vec<f64>>,
    pub trace: AttentionTrace,
}

impl DialoguePrediction {
    pub fn argmax(&self) -> Vec<usize> {
        self.probs.iter().map(|p| argmax(p)).collect()
    }
}

/// Index of the largest value; the first one on ties.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Configuration plus trained parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DialogueModel {
    pub config: ModelConfig,
    pub params: ModelParams,
}

impl DialogueModel {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        let params = ModelParams::init(&config, seed)?;
        Ok(Self { config, params })
    }

    pub fn from_parts(config: ModelConfig, params: ModelParams) -> Result<Self> {
        params.check(&config)?;
        Ok(Self { config, params })
    }

    pub fn predict(&self, dialogue: &Dialogue) -> Result<DialoguePrediction> {
        let mut tape = Tape::new();
        let vars = self.params.bind(&mut tape);
        let graph = dialogue_graph(&mut tape, &self.config, &vars, dialogue)?;
        Ok(DialoguePrediction {
            probs: graph.probs.iter().map(|&p| tape.value(p).to_vec()).collect(),
            trace: graph.trace,
        })
    }
}
