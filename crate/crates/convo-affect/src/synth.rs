//! Writes the synthetic corpus to disk as embedding containers, a manifest
//! and a matching run config.

use std::fs;
use std::path::Path;

use convo_affect_core::synthetic::{SyntheticCorpus, SyntheticSpec};

use crate::config::RunConfig;
use crate::container::write_embeddings;
use crate::error::{Error, Result};
use crate::manifest::{Label, UtteranceRecord};

pub const MANIFEST: &str = "manifest.jsonl";
pub const CONFIG: &str = "config.toml";

/// Model and training settings sized for the synthetic corpus.
pub fn synthetic_run_config(spec: &SyntheticSpec) -> RunConfig {
    let mut cfg = RunConfig {
        model: convo_affect_core::model::ModelConfig::small(spec.embedding_dim, 16),
        ..RunConfig::default()
    };
    cfg.train.lr = 1e-3;
    cfg.train.max_epochs = 500;
    cfg.train.patience = 0;
    cfg.train.target_train_accuracy = Some(1.0);
    cfg
}

pub fn write_synthetic(dir: &Path, spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    let corpus = SyntheticCorpus::generate(spec);
    let emb_dir = dir.join("embeddings");
    fs::create_dir_all(&emb_dir).map_err(|e| Error::io(&emb_dir, e))?;
    let mut manifest = String::new();
    for (d, segs) in corpus.dialogues.iter().zip(&corpus.segments) {
        for (t, (turn, embs)) in d.turns.iter().zip(segs).enumerate() {
            let rel = format!("embeddings/{}_{t}.cafe", d.id);
            write_embeddings(&dir.join(&rel), embs)?;
            let rec = UtteranceRecord {
                dialogue_id: d.id.clone(),
                turn: t,
                speaker: turn.speaker.clone(),
                label: turn.label.map(Label::Id),
                audio: None,
                container: Some(rel.into()),
            };
            manifest += &serde_json::to_string(&rec).expect("record serializes");
            manifest.push('\n');
        }
    }
    let mpath = dir.join(MANIFEST);
    fs::write(&mpath, manifest).map_err(|e| Error::io(&mpath, e))?;
    let cpath = dir.join(CONFIG);
    fs::write(&cpath, synthetic_run_config(spec).to_toml()).map_err(|e| Error::io(&cpath, e))?;
    Ok(corpus)
}
