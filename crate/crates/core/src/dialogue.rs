//! In-memory dialogues: ordered turns with a speaker, features and label.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::encoder::UtteranceVector;
use crate::frontend::SegmentPatch;
use crate::{Error, Result};

/// Features of one utterance as the model consumes them.
#[derive(Debug, Clone, PartialEq)]
pub enum UtteranceInput {
    /// Pooled utterance vector (precomputed or stub embeddings).
    Vector(UtteranceVector),
    /// Raw patches for the trainable linear embedder.
    Patches(Vec<SegmentPatch>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Turn {
    pub speaker: String,
    pub input: UtteranceInput,
    pub label: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dialogue {
    pub id: String,
    pub turns: Vec<Turn>,
}

impl Dialogue {
    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    /// Party index of every turn, numbered by first appearance, plus the
    /// party count. Indices depend only on the speaking pattern, never on
    /// the identifier strings.
    pub fn parties(&self) -> Result<(Vec<usize>, usize)> {
        let mut names: Vec<&str> = Vec::new();
        let mut idx = Vec::with_capacity(self.turns.len());
        for (t, turn) in self.turns.iter().enumerate() {
            let name = turn.speaker.as_str();
            if name.trim().is_empty() || name.chars().any(char::is_control) {
                return Err(Error::Data(format!(
                    "dialogue {}: turn {t} has an invalid speaker id {name:?}",
                    self.id
                )));
            }
            let i = match names.iter().position(|n| *n == name) {
                Some(i) => i,
                None => {
                    names.push(name);
                    names.len() - 1
                }
            };
            idx.push(i);
        }
        Ok((idx, names.len()))
    }

    pub fn labels(&self) -> Result<Vec<usize>> {
        self.turns
            .iter()
            .enumerate()
            .map(|(t, turn)| {
                turn.label
                    .ok_or_else(|| Error::Data(format!("dialogue {}: turn {t} has no label", self.id)))
            })
            .collect()
    }
}
