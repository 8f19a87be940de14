//! Runs the full model and its four single-component ablations.

use convo_affect_core::encoder::EmbedderKind;
use convo_affect_core::metrics::EvalReport;
use convo_affect_core::model::DialogueModel;
use convo_affect_core::train::train;

use crate::config::RunConfig;
use crate::dataset::build_dialogues;
use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::manifest::ManifestDialogue;

pub fn variants(base: &RunConfig) -> Vec<(String, RunConfig)> {
    let with = |f: &dyn Fn(&mut RunConfig)| {
        let mut c = base.clone();
        f(&mut c);
        c
    };
    vec![
        ("full model".into(), base.clone()),
        (
            "w/o pretrained embedder".into(),
            with(&|c| {
                c.model.embedder = EmbedderKind::Linear;
                c.model.patch_len = c.frontend.patch_len();
            }),
        ),
        (
            "w/o attentive contextual state".into(),
            with(&|c| c.model.ablations.no_attention_context = true),
        ),
        ("w/o self-speaker state".into(), with(&|c| c.model.ablations.no_self_state = true)),
        ("w/o intra-speaker state".into(), with(&|c| c.model.ablations.no_intra_state = true)),
    ]
}

/// Trains and tests every variant. A variant whose inputs cannot be built
/// from the given sources (patch-level embedder on precomputed embeddings)
/// reports `None`.
pub fn run_ablations(
    train_set: &[ManifestDialogue],
    val_set: &[ManifestDialogue],
    test_set: &[ManifestDialogue],
    base: &RunConfig,
) -> Result<Vec<(String, Option<EvalReport>)>> {
    let mut out = Vec::new();
    for (name, cfg) in variants(base) {
        let build = |ds| build_dialogues(ds, &cfg.frontend, &cfg.model, cfg.workers);
        let tr = match build(train_set) {
            Ok(d) => d,
            Err(Error::Data(_)) | Err(Error::Core(convo_affect_core::Error::ModeMismatch(_))) => {
                out.push((name, None));
                continue;
            }
            Err(e) => return Err(e),
        };
        let (va, te) = (build(val_set)?, build(test_set)?);
        let model = DialogueModel::new(cfg.model.clone(), cfg.seed)?;
        let outcome = train(&tr, &va, model, &cfg.train)?;
        out.push((name, Some(evaluate(&te, &outcome.best.model, cfg.workers)?)));
    }
    Ok(out)
}
