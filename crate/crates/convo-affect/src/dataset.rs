//! Turns manifest records into model-ready dialogues.

use convo_affect_core::dialogue::{Dialogue, Turn, UtteranceInput};
use convo_affect_core::encoder::{embed_segments, statistical_unit, Embedder, EmbedderKind, StubEmbedder};
use convo_affect_core::frontend::{extract_patches, FrontendConfig, SegmentPatch};
use convo_affect_core::model::ModelConfig;
use convo_affect_core::Error as CoreError;

use crate::container::{read_container, Payload};
use crate::error::{Error, Result};
use crate::manifest::{ManifestDialogue, Source, Utterance};
use crate::parallel::par_map;
use crate::wav::read_wav;

/// Frontend settings plus the embedder half of a model config.
pub struct Featurizer<'a> {
    frontend: &'a FrontendConfig,
    model: &'a ModelConfig,
    stub: Option<StubEmbedder>,
}

impl<'a> Featurizer<'a> {
    pub fn new(frontend: &'a FrontendConfig, model: &'a ModelConfig) -> Self {
        let stub = (model.embedder == EmbedderKind::Stub)
            .then(|| StubEmbedder::new(model.embedder_seed, model.embedding_dim, frontend.patch_len()));
        Self { frontend, model, stub }
    }

    fn patches_to_input(&self, patches: Vec<SegmentPatch>) -> Result<UtteranceInput> {
        match (&self.model.embedder, &self.stub) {
            (EmbedderKind::Linear, _) => Ok(UtteranceInput::Patches(patches)),
            (EmbedderKind::Stub, Some(stub)) => {
                let embs = embed_segments(&patches, &Embedder::Stub(stub))?;
                Ok(UtteranceInput::Vector(statistical_unit(&embs)?))
            }
            _ => Err(CoreError::ModeMismatch(
                "precomputed embedder cannot consume patches or audio; use --embedder stub or linear",
            )
            .into()),
        }
    }

    pub fn utterance(&self, u: &Utterance) -> Result<UtteranceInput> {
        let fe = self.frontend;
        match &u.source {
            Source::Audio(path) => {
                let wave = read_wav(path)?;
                self.patches_to_input(extract_patches(&wave, fe)?)
            }
            Source::Container(path) => match read_container(path)? {
                p @ Payload::Embeddings { .. } => {
                    if self.model.embedder != EmbedderKind::Precomputed {
                        return Err(Error::Data(format!(
                            "{} holds precomputed embeddings but the embedder is not 'precomputed'",
                            path.display()
                        )));
                    }
                    let embs = p.embeddings(self.model.embedding_dim)?;
                    Ok(UtteranceInput::Vector(statistical_unit(&embs)?))
                }
                p @ Payload::Patches { .. } => {
                    self.patches_to_input(p.patches(fe.segment_frames, fe.n_mels)?)
                }
            },
        }
    }
}

/// Featurizes every utterance, in parallel across utterances.
pub fn build_dialogues(
    ds: &[ManifestDialogue],
    frontend: &FrontendConfig,
    model: &ModelConfig,
    workers: usize,
) -> Result<Vec<Dialogue>> {
    let f = Featurizer::new(frontend, model);
    let flat: Vec<&Utterance> = ds.iter().flat_map(|d| &d.utterances).collect();
    let inputs = par_map(&flat, workers, |u| f.utterance(u));
    let mut inputs = inputs.into_iter();
    ds.iter()
        .map(|d| {
            let turns = d
                .utterances
                .iter()
                .map(|u| {
                    let input = inputs.next().expect("one input per utterance")?;
                    Ok(Turn {
                        speaker: u.speaker.clone(),
                        input,
                        label: u.label,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Dialogue {
                id: d.id.clone(),
                turns,
            })
        })
        .collect()
}
