//! JSON-lines dataset manifests.
//!
//! One record per line:
//!
//! ```json
//! {"dialogue_id": "d1", "turn": 0, "speaker": "Ross", "label": "joy", "audio": "d1/u0.wav"}
//! {"dialogue_id": "d1", "turn": 1, "speaker": "Rachel", "label": 4, "container": "d1/u1.cafe"}
//! ```
//!
//! Relative sources resolve against `CONVO_AFFECT_DATA_ROOT` when set,
//! otherwise against the manifest's directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use convo_affect_core::{emotion_id, EMOTIONS};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DATA_ROOT_ENV: &str = "CONVO_AFFECT_DATA_ROOT";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Id(usize),
    Name(String),
}

impl Label {
    pub fn id(&self) -> Result<usize> {
        match self {
            Label::Id(i) if *i < EMOTIONS.len() => Ok(*i),
            Label::Id(i) => Err(Error::Data(format!("label id {i} outside 0..{}", EMOTIONS.len()))),
            Label::Name(n) => emotion_id(n).ok_or_else(|| Error::Data(format!("unknown label {n:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtteranceRecord {
    pub dialogue_id: String,
    pub turn: usize,
    pub speaker: String,
    /// Absent for inference-only manifests.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub container: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    Audio(PathBuf),
    Container(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Utterance {
    pub turn: usize,
    pub speaker: String,
    pub label: Option<usize>,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestDialogue {
    pub id: String,
    pub utterances: Vec<Utterance>,
}

impl ManifestDialogue {
    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }
}

fn data_root(manifest: &Path) -> PathBuf {
    match std::env::var_os(DATA_ROOT_ENV) {
        Some(root) if !root.is_empty() => PathBuf::from(root),
        _ => manifest.parent().map(Path::to_path_buf).unwrap_or_default(),
    }
}

/// Parses manifest text. Dialogues come back sorted by id and turns by
/// index, so line order never matters.
pub fn parse_manifest(text: &str, root: &Path) -> Result<Vec<ManifestDialogue>> {
    let mut groups: BTreeMap<String, BTreeMap<usize, Utterance>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let rec: UtteranceRecord =
            serde_json::from_str(line).map_err(|e| Error::Data(format!("manifest line {}: {e}", i + 1)))?;
        let source = match (rec.audio, rec.container) {
            (Some(a), None) => Source::Audio(root.join(a)),
            (None, Some(c)) => Source::Container(root.join(c)),
            _ => {
                return Err(Error::Data(format!(
                    "manifest line {}: exactly one of audio/container is required",
                    i + 1
                )))
            }
        };
        let label = rec
            .label
            .as_ref()
            .map(Label::id)
            .transpose()
            .map_err(|e| Error::Data(format!("manifest line {}: {e}", i + 1)))?;
        let turns = groups.entry(rec.dialogue_id.clone()).or_default();
        let utt = Utterance {
            turn: rec.turn,
            speaker: rec.speaker,
            label,
            source,
        };
        if turns.insert(rec.turn, utt).is_some() {
            return Err(Error::Data(format!(
                "manifest line {}: duplicate turn {} in dialogue {}",
                i + 1,
                rec.turn,
                rec.dialogue_id
            )));
        }
    }
    groups
        .into_iter()
        .map(|(id, turns)| {
            for (expected, &turn) in turns.keys().enumerate() {
                if turn != expected {
                    return Err(Error::Data(format!("dialogue {id}: turn {expected} is missing")));
                }
            }
            Ok(ManifestDialogue {
                id,
                utterances: turns.into_values().collect(),
            })
        })
        .collect()
}

pub fn load_manifest(path: &Path) -> Result<Vec<ManifestDialogue>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text, &data_root(path))
}

pub fn utterance_count(ds: &[ManifestDialogue]) -> usize {
    ds.iter().map(ManifestDialogue::len).sum()
}
