//! Parallel inference over dialogues.

use convo_affect_core::dialogue::Dialogue;
use convo_affect_core::metrics::{ConfusionMatrix, EvalReport};
use convo_affect_core::model::{DialogueModel, DialoguePrediction};

use crate::error::Result;
use crate::parallel::par_map;

pub fn predict_all(ds: &[Dialogue], model: &DialogueModel, workers: usize) -> Result<Vec<DialoguePrediction>> {
    par_map(ds, workers, |d| model.predict(d))
        .into_iter()
        .map(|r| r.map_err(Into::into))
        .collect()
}

/// Same result as the sequential evaluation, computed across `workers`.
pub fn evaluate(ds: &[Dialogue], model: &DialogueModel, workers: usize) -> Result<EvalReport> {
    let preds = predict_all(ds, model, workers)?;
    let mut m = ConfusionMatrix::new(model.config.n_classes);
    for (d, p) in ds.iter().zip(&preds) {
        for (label, pred) in d.labels()?.into_iter().zip(p.argmax()) {
            m.record(label, pred)?;
        }
    }
    Ok(EvalReport::from_confusion(&m))
}
