//! Run configuration: one TOML file with `[frontend]`, `[model]` and
//! `[train]` tables. Unknown keys are rejected; omitted keys take defaults.

use std::fs;
use std::path::Path;

use convo_affect_core::encoder::EmbedderKind;
use convo_affect_core::frontend::FrontendConfig;
use convo_affect_core::model::ModelConfig;
use convo_affect_core::train::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seeds parameter init, shuffling and the stub embedder.
    pub seed: u64,
    /// Worker threads for feature extraction and evaluation.
    pub workers: usize,
    pub frontend: FrontendConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            workers: 1,
            frontend: FrontendConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub embedder: Option<EmbedderKind>,
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::from_toml(&fs::read_to_string(p).map_err(|e| Error::io(p, e))?),
            None => Ok(Self::default()),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Applies overrides, propagates the seed and patch size, validates.
    pub fn finalize(mut self, o: &Overrides) -> Result<Self> {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(e) = o.embedder {
            self.model.embedder = e;
        }
        if let Some(w) = o.workers {
            self.workers = w;
        }
        self.workers = self.workers.max(1);
        self.train.seed = self.seed;
        self.model.embedder_seed = self.seed;
        self.model.patch_len = self.frontend.patch_len();
        self.frontend.validate()?;
        self.model.validate()?;
        self.train.validate()?;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_parses_back() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn partial_file_takes_defaults() {
        let c = RunConfig::from_toml("seed = 3\n[model]\ncontext_dim = 64\n[train]\nlr = 0.001\n").unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.model.context_dim, 64);
        assert_eq!(c.model.self_dim, 128);
        assert_eq!(c.train.lr, 1e-3);
        assert_eq!(c.frontend, FrontendConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml("sed = 3").is_err());
        assert!(RunConfig::from_toml("[model]\nhidden = 3").is_err());
        assert!(RunConfig::from_toml("[model.ablations]\nno_everything = true").is_err());
    }

    #[test]
    fn overrides_win() {
        let c = RunConfig::from_toml("seed = 3").unwrap();
        let c = c
            .finalize(&Overrides {
                seed: Some(9),
                embedder: Some(EmbedderKind::Linear),
                workers: Some(0),
            })
            .unwrap();
        assert_eq!((c.seed, c.train.seed, c.workers), (9, 9, 1));
        assert_eq!(c.model.embedder, EmbedderKind::Linear);
    }
}
