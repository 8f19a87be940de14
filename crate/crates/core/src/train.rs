//! Dialogue-level training loop and evaluation.
//!
//! A batch is `batch_dialogues` dialogues. Each dialogue gets its own tape;
//! its summed cross-entropy is scaled by `1 / (utterances in the batch)` so
//! the accumulated gradient is that of the batch mean. The L2 penalty is
//! added once per batch, then Adam takes one step.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dialogue::Dialogue;
use crate::metrics::{ConfusionMatrix, EvalReport};
use crate::model::{argmax, dialogue_graph, DialogueModel};
use crate::numerics::{l2_penalty, Adam, AdamConfig, Tape, Tensor, Var};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_dialogues: usize,
    pub l2_weight: f64,
    pub max_epochs: usize,
    /// Epochs without a better selection metric before stopping; 0 disables.
    pub patience: usize,
    /// Seeds the per-epoch shuffle.
    pub seed: u64,
    /// Stop as soon as post-epoch training accuracy reaches this value.
    pub target_train_accuracy: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            batch_dialogues: 32,
            l2_weight: 3e-4,
            max_epochs: 100,
            patience: 10,
            seed: 0,
            target_train_accuracy: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if self.batch_dialogues == 0 {
            return Err(Error::Config("batch_dialogues must be positive".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be positive".into()));
        }
        if !(self.l2_weight.is_finite() && self.l2_weight >= 0.0) {
            return Err(Error::Config(format!("l2_weight must be >= 0, got {}", self.l2_weight)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepLog {
    pub epoch: usize,
    pub batch: usize,
    /// Mean cross-entropy per utterance plus the L2 penalty.
    pub loss: f64,
    pub utterances: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean per-utterance cross-entropy over the epoch, without L2.
    pub train_loss: f64,
    /// Accuracy of the parameters at the end of the epoch.
    pub train_accuracy: f64,
    pub train_weighted_f1: f64,
    pub val_weighted_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainLog {
    pub steps: Vec<StepLog>,
    pub epochs: Vec<EpochLog>,
}

/// Best model seen so far, with the epoch (1-based) and selection metric.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: DialogueModel,
    pub epoch: usize,
    pub metric: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub best: Checkpoint,
    pub last: DialogueModel,
    pub log: TrainLog,
}

fn check_labels(ds: &[Dialogue], n_classes: usize) -> Result<()> {
    for d in ds {
        for (t, label) in d.labels()?.into_iter().enumerate() {
            if label >= n_classes {
                return Err(Error::Data(format!(
                    "dialogue {}: turn {t} has label {label}, expected < {n_classes}",
                    d.id
                )));
            }
        }
    }
    Ok(())
}

/// Summed per-utterance cross-entropy of one dialogue under `model`.
pub fn dialogue_loss(model: &DialogueModel, dialogue: &Dialogue) -> Result<f64> {
    let labels = dialogue.labels()?;
    let mut tape = Tape::new();
    let vars = model.params.bind(&mut tape);
    let graph = dialogue_graph(&mut tape, &model.config, &vars, dialogue)?;
    let mut total = 0.0;
    for (&logits, &y) in graph.logits.iter().zip(&labels) {
        let ce = tape.cross_entropy(logits, y)?;
        total += tape.value(ce)[0];
    }
    Ok(total)
}

/// Owns a model and its optimizer state; one call per epoch.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub model: DialogueModel,
    pub config: TrainConfig,
    optimizer: Adam,
    rng: ChaCha8Rng,
    epoch: usize,
}

impl Trainer {
    pub fn new(model: DialogueModel, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let optimizer = Adam::new(AdamConfig {
            lr: config.lr,
            ..AdamConfig::default()
        });
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Self {
            model,
            config,
            optimizer,
            rng,
            epoch: 0,
        })
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    /// One shuffled pass over `ds`. Returns the per-batch logs and the
    /// mean per-utterance cross-entropy.
    pub fn train_epoch(&mut self, ds: &[Dialogue]) -> Result<(Vec<StepLog>, f64)> {
        if ds.is_empty() {
            return Err(Error::Data("empty training split".into()));
        }
        check_labels(ds, self.model.config.n_classes)?;
        self.epoch += 1;
        let mut order: Vec<usize> = (0..ds.len()).collect();
        order.shuffle(&mut self.rng);
        let mut steps = Vec::new();
        let (mut ce_sum, mut n_utts) = (0.0, 0usize);
        for (b, chunk) in order.chunks(self.config.batch_dialogues).enumerate() {
            let batch: Vec<&Dialogue> = chunk.iter().map(|&i| &ds[i]).collect();
            let (ce, n, loss) = self.train_batch(&batch, b)?;
            ce_sum += ce;
            n_utts += n;
            steps.push(StepLog {
                epoch: self.epoch,
                batch: b,
                loss,
                utterances: n,
            });
        }
        Ok((steps, ce_sum / n_utts as f64))
    }

    /// Returns (summed cross-entropy, utterance count, batch loss).
    fn train_batch(&mut self, batch: &[&Dialogue], b: usize) -> Result<(f64, usize, f64)> {
        let n: usize = batch.iter().map(|d| d.len()).sum();
        if n == 0 {
            return Err(Error::EmptyDialogue);
        }
        let scale = 1.0 / n as f64;
        let cfg = &self.model.config;
        let params = &self.model.params;
        let mut acc: Vec<Tensor> = params.tensors().iter().map(|t| Tensor::zeros(t.shape())).collect();
        let mut ce_total = 0.0;

        for d in batch {
            let labels = d.labels()?;
            let mut tape = Tape::new();
            let vars = params.bind(&mut tape);
            let graph = dialogue_graph(&mut tape, cfg, &vars, d)?;
            let mut sum: Option<Var> = None;
            for (&logits, &y) in graph.logits.iter().zip(&labels) {
                let ce = tape.cross_entropy(logits, y)?;
                sum = Some(match sum {
                    Some(s) => tape.add(s, ce)?,
                    None => ce,
                });
            }
            let sum = sum.ok_or(Error::EmptyDialogue)?;
            let ce = tape.value(sum)[0];
            if !ce.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite loss {ce} at epoch {} batch {b} (dialogue {})",
                    self.epoch, d.id
                )));
            }
            ce_total += ce;
            let loss = tape.scale(sum, scale);
            let grads = tape.backward(loss)?;
            accumulate(&mut acc, &grads, &vars.tensors());
        }

        let mut penalty = 0.0;
        if self.config.l2_weight > 0.0 {
            let mut tape = Tape::new();
            let vars = params.bind(&mut tape);
            let leaves: Vec<Var> = vars.tensors().into_iter().copied().collect();
            let l2 = l2_penalty(&mut tape, &leaves, self.config.l2_weight)?;
            penalty = tape.value(l2)[0];
            let grads = tape.backward(l2)?;
            accumulate(&mut acc, &grads, &vars.tensors());
        }

        let loss = ce_total * scale + penalty;
        let grads: Vec<&Tensor> = acc.iter().collect();
        let mut targets = self.model.params.tensors_mut();
        self.optimizer.step(&mut targets, &grads).map_err(|e| match e {
            Error::Numerical(msg) => Error::Numerical(format!("epoch {} batch {b}: {msg}", self.epoch)),
            other => other,
        })?;
        Ok((ce_total, n, loss))
    }
}

fn accumulate(acc: &mut [Tensor], grads: &crate::numerics::Gradients, vars: &[&Var]) {
    for (a, v) in acc.iter_mut().zip(vars) {
        if let Some(g) = grads.get(**v) {
            for (x, y) in a.data_mut().iter_mut().zip(g) {
                *x += y;
            }
        }
    }
}

/// Argmax predictions for every labelled turn, in dialogue order.
pub fn predict_labels(ds: &[Dialogue], model: &DialogueModel) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut preds = Vec::new();
    let mut labels = Vec::new();
    for d in ds {
        labels.extend(d.labels()?);
        preds.extend(model.predict(d)?.probs.iter().map(|p| argmax(p)));
    }
    Ok((preds, labels))
}

pub fn evaluate(ds: &[Dialogue], model: &DialogueModel) -> Result<EvalReport> {
    let (preds, labels) = predict_labels(ds, model)?;
    let m = ConfusionMatrix::from_predictions(&preds, &labels, model.config.n_classes)?;
    Ok(EvalReport::from_confusion(&m))
}

/// Trains from `model`'s current parameters. The checkpoint keeps the epoch
/// with the best validation weighted F1, or training weighted F1 when
/// `val` is empty; ties keep the earlier epoch.
pub fn train(train: &[Dialogue], val: &[Dialogue], model: DialogueModel, tcfg: &TrainConfig) -> Result<TrainOutcome> {
    if train.is_empty() {
        return Err(Error::Data("empty training split".into()));
    }
    check_labels(train, model.config.n_classes)?;
    check_labels(val, model.config.n_classes)?;
    let mut trainer = Trainer::new(model, tcfg.clone())?;
    let mut log = TrainLog::default();
    let mut best: Option<Checkpoint> = None;
    let mut since_best = 0;

    for _ in 0..tcfg.max_epochs {
        let (steps, train_loss) = trainer.train_epoch(train)?;
        log.steps.extend(steps);
        let train_report = evaluate(train, &trainer.model)?;
        let val_f1 = if val.is_empty() {
            None
        } else {
            Some(evaluate(val, &trainer.model)?.weighted_f1)
        };
        let epoch = trainer.epoch();
        log.epochs.push(EpochLog {
            epoch,
            train_loss,
            train_accuracy: train_report.accuracy,
            train_weighted_f1: train_report.weighted_f1,
            val_weighted_f1: val_f1,
        });
        let metric = val_f1.unwrap_or(train_report.weighted_f1);
        if best.as_ref().is_none_or(|b| metric > b.metric) {
            best = Some(Checkpoint {
                model: trainer.model.clone(),
                epoch,
                metric,
            });
            since_best = 0;
        } else {
            since_best += 1;
        }
        if tcfg.target_train_accuracy.is_some_and(|t| train_report.accuracy >= t) {
            break;
        }
        if tcfg.patience > 0 && since_best >= tcfg.patience {
            break;
        }
    }

    Ok(TrainOutcome {
        best: best.expect("at least one epoch ran"),
        last: trainer.model,
        log,
    })
}
