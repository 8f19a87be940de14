use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Direction, ModelConfig};
use crate::encoder::EmbedderKind;
use crate::numerics::{Dense, GruParams, Shape, Tape, Tensor, Var};
use crate::{Error, Result};

/// Additive attention scorer: `score(C) = v . tanh(W C + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams<T = Tensor> {
    pub w: T,
    pub b: T,
    pub v: T,
}

/// Recurrent parameters of one pass over the dialogue.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionParams<T = Tensor> {
    pub context: GruParams<T>,
    pub speaker: GruParams<T>,
    pub listener: GruParams<T>,
    pub intra: GruParams<T>,
    pub emotion: GruParams<T>,
    pub attention: AttentionParams<T>,
}

/// Every trainable tensor of the model, generic over the leaf type so the
/// same layout serves tensors, tape handles, gradients and moments.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T = Tensor> {
    pub forward: DirectionParams<T>,
    pub backward: Option<DirectionParams<T>>,
    pub fc1: Dense<T>,
    pub fc2: Dense<T>,
    pub embedder: Option<Dense<T>>,
}

impl AttentionParams<Tensor> {
    fn init<R: Rng + ?Sized>(cfg: &ModelConfig, rng: &mut R) -> Self {
        let k = 1.0 / libm::sqrt(cfg.context_dim as f64);
        let kv = 1.0 / libm::sqrt(cfg.attention_dim as f64);
        Self {
            w: Tensor::uniform(Shape::new(cfg.attention_dim, cfg.context_dim), k, rng),
            b: Tensor::zeros(Shape::col(cfg.attention_dim)),
            v: Tensor::uniform(Shape::col(cfg.attention_dim), kv, rng),
        }
    }

    fn zeros(cfg: &ModelConfig) -> Self {
        Self {
            w: Tensor::zeros(Shape::new(cfg.attention_dim, cfg.context_dim)),
            b: Tensor::zeros(Shape::col(cfg.attention_dim)),
            v: Tensor::zeros(Shape::col(cfg.attention_dim)),
        }
    }
}

impl<T> AttentionParams<T> {
    pub fn map<'a, U>(&'a self, f: &mut impl FnMut(&'a T) -> U) -> AttentionParams<U> {
        AttentionParams {
            w: f(&self.w),
            b: f(&self.b),
            v: f(&self.v),
        }
    }

    fn visit<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a T)>) {
        out.push((format!("{prefix}.w"), &self.w));
        out.push((format!("{prefix}.b"), &self.b));
        out.push((format!("{prefix}.v"), &self.v));
    }

    fn visit_mut<'a>(&'a mut self, out: &mut Vec<&'a mut T>) {
        out.extend([&mut self.w, &mut self.b, &mut self.v]);
    }
}

impl DirectionParams<Tensor> {
    fn init<R: Rng + ?Sized>(cfg: &ModelConfig, rng: &mut R) -> Self {
        Self {
            context: GruParams::init(cfg.context_input_dim(), cfg.context_dim, rng),
            speaker: GruParams::init(cfg.self_input_dim(), cfg.self_dim, rng),
            listener: GruParams::init(cfg.self_input_dim(), cfg.self_dim, rng),
            intra: GruParams::init(cfg.intra_input_dim(), cfg.intra_dim, rng),
            emotion: GruParams::init(cfg.emotion_input_dim(), cfg.emotion_dim, rng),
            attention: AttentionParams::init(cfg, rng),
        }
    }

    fn zeros(cfg: &ModelConfig) -> Self {
        Self {
            context: GruParams::zeros(cfg.context_input_dim(), cfg.context_dim),
            speaker: GruParams::zeros(cfg.self_input_dim(), cfg.self_dim),
            listener: GruParams::zeros(cfg.self_input_dim(), cfg.self_dim),
            intra: GruParams::zeros(cfg.intra_input_dim(), cfg.intra_dim),
            emotion: GruParams::zeros(cfg.emotion_input_dim(), cfg.emotion_dim),
            attention: AttentionParams::zeros(cfg),
        }
    }
}

impl<T> DirectionParams<T> {
    pub fn map<'a, U>(&'a self, f: &mut impl FnMut(&'a T) -> U) -> DirectionParams<U> {
        DirectionParams {
            context: self.context.map(f),
            speaker: self.speaker.map(f),
            listener: self.listener.map(f),
            intra: self.intra.map(f),
            emotion: self.emotion.map(f),
            attention: self.attention.map(f),
        }
    }

    fn visit<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a T)>) {
        self.context.visit(&format!("{prefix}.gru_c"), out);
        self.speaker.visit(&format!("{prefix}.gru_ss"), out);
        self.listener.visit(&format!("{prefix}.gru_sl"), out);
        self.intra.visit(&format!("{prefix}.gru_i"), out);
        self.emotion.visit(&format!("{prefix}.gru_e"), out);
        self.attention.visit(&format!("{prefix}.attn"), out);
    }

    fn visit_mut<'a>(&'a mut self, out: &mut Vec<&'a mut T>) {
        self.context.visit_mut(out);
        self.speaker.visit_mut(out);
        self.listener.visit_mut(out);
        self.intra.visit_mut(out);
        self.emotion.visit_mut(out);
        self.attention.visit_mut(out);
    }
}

impl ModelParams<Tensor> {
    /// Uniform `(-1/sqrt(fan), 1/sqrt(fan))` weights, zero biases.
    pub fn init(cfg: &ModelConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let forward = DirectionParams::init(cfg, &mut rng);
        let backward = match cfg.direction {
            Direction::Forward => None,
            Direction::Bidirectional => Some(DirectionParams::init(cfg, &mut rng)),
        };
        let d = cfg.classifier_dim();
        let fc1 = Dense::init(d, d, &mut rng);
        let fc2 = Dense::init(d, cfg.n_classes, &mut rng);
        let embedder = (cfg.embedder == EmbedderKind::Linear)
            .then(|| Dense::init(cfg.patch_len, cfg.embedding_dim, &mut rng));
        Ok(Self {
            forward,
            backward,
            fc1,
            fc2,
            embedder,
        })
    }

    pub fn zeros(cfg: &ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let d = cfg.classifier_dim();
        Ok(Self {
            forward: DirectionParams::zeros(cfg),
            backward: (cfg.direction == Direction::Bidirectional).then(|| DirectionParams::zeros(cfg)),
            fc1: Dense::zeros(d, d),
            fc2: Dense::zeros(d, cfg.n_classes),
            embedder: (cfg.embedder == EmbedderKind::Linear).then(|| Dense::zeros(cfg.patch_len, cfg.embedding_dim)),
        })
    }

    /// Checks every tensor shape against what `cfg` prescribes.
    pub fn check(&self, cfg: &ModelConfig) -> Result<()> {
        let expected = Self::zeros(cfg)?;
        let mine = self.named();
        let theirs = expected.named();
        if mine.len() != theirs.len() {
            return Err(Error::Dim {
                expected: theirs.len(),
                found: mine.len(),
            });
        }
        for ((name, a), (_, b)) in mine.iter().zip(&theirs) {
            if a.shape() != b.shape() {
                return Err(Error::Config(format!(
                    "parameter {name} has shape {}, config expects {}",
                    a.shape(),
                    b.shape()
                )));
            }
        }
        Ok(())
    }

    pub fn bind<'p>(&'p self, tape: &mut Tape<'p>) -> ModelParams<Var> {
        self.map(&mut |t| tape.param(t))
    }

    pub fn count(&self) -> usize {
        self.tensors().iter().map(|t| t.data().len()).sum()
    }

    pub fn sum_squares(&self) -> f64 {
        self.tensors().iter().map(|t| t.sum_squares()).sum()
    }
}

impl<T> ModelParams<T> {
    pub fn map<'a, U>(&'a self, f: &mut impl FnMut(&'a T) -> U) -> ModelParams<U> {
        ModelParams {
            forward: self.forward.map(f),
            backward: self.backward.as_ref().map(|b| b.map(f)),
            fc1: self.fc1.map(f),
            fc2: self.fc2.map(f),
            embedder: self.embedder.as_ref().map(|e| e.map(f)),
        }
    }

    /// All leaves with stable dotted names, in a fixed order.
    pub fn named(&self) -> Vec<(String, &T)> {
        let mut out = Vec::new();
        self.forward.visit("fwd", &mut out);
        if let Some(b) = &self.backward {
            b.visit("bwd", &mut out);
        }
        self.fc1.visit("fc1", &mut out);
        self.fc2.visit("fc2", &mut out);
        if let Some(e) = &self.embedder {
            e.visit("embedder", &mut out);
        }
        out
    }

    pub fn tensors(&self) -> Vec<&T> {
        self.named().into_iter().map(|(_, t)| t).collect()
    }

    /// Same order as [`ModelParams::named`].
    pub fn tensors_mut(&mut self) -> Vec<&mut T> {
        let mut out = Vec::new();
        self.forward.visit_mut(&mut out);
        if let Some(b) = &mut self.backward {
            b.visit_mut(&mut out);
        }
        self.fc1.visit_mut(&mut out);
        self.fc2.visit_mut(&mut out);
        if let Some(e) = &mut self.embedder {
            e.visit_mut(&mut out);
        }
        out
    }
}
