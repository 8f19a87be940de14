use convo_affect_core::model::{Ablations, DialogueModel, ModelConfig};
use convo_affect_core::synthetic::{SyntheticCorpus, SyntheticSpec};
use convo_affect_core::train::{evaluate, train, TrainConfig, Trainer};

fn overfit_config() -> (ModelConfig, TrainConfig) {
    let spec = SyntheticSpec::default();
    let mcfg = ModelConfig::small(spec.embedding_dim, 16);
    let tcfg = TrainConfig {
        lr: 1e-3,
        max_epochs: 500,
        patience: 0,
        seed: 1,
        target_train_accuracy: Some(0.95),
        ..TrainConfig::default()
    };
    (mcfg, tcfg)
}

#[test]
fn synthetic_corpus_is_learned() {
    let corpus = SyntheticCorpus::generate(&SyntheticSpec::default());
    let (mcfg, tcfg) = overfit_config();
    let out = train(&corpus.dialogues, &[], DialogueModel::new(mcfg, 1).unwrap(), &tcfg).unwrap();
    let report = evaluate(&corpus.dialogues, &out.last).unwrap();
    assert!(report.accuracy >= 0.95, "accuracy {}", report.accuracy);
    assert_eq!(report.support.iter().sum::<u64>(), 48);
}

#[test]
fn early_epoch_loss_is_non_increasing() {
    let corpus = SyntheticCorpus::generate(&SyntheticSpec::default());
    let (mcfg, tcfg) = overfit_config();
    let mut failures = 0;
    for seed in 0..5 {
        let model = DialogueModel::new(mcfg.clone(), seed).unwrap();
        let mut trainer = Trainer::new(model, TrainConfig { seed, ..tcfg.clone() }).unwrap();
        let losses: Vec<f64> = (0..10).map(|_| trainer.train_epoch(&corpus.dialogues).unwrap().1).collect();
        if losses.windows(2).any(|w| w[1] > w[0]) {
            failures += 1;
        }
    }
    assert!(failures <= 1, "{failures} of 5 seeds increased");
}

#[test]
fn ablated_run_completes() {
    let corpus = SyntheticCorpus::generate(&SyntheticSpec::default());
    let (mcfg, tcfg) = overfit_config();
    let mcfg = ModelConfig {
        ablations: Ablations {
            no_attention_context: true,
            no_self_state: true,
            no_intra_state: true,
        },
        ..mcfg
    };
    let tcfg = TrainConfig { max_epochs: 20, ..tcfg };
    let out = train(&corpus.dialogues, &corpus.dialogues[..2], DialogueModel::new(mcfg, 1).unwrap(), &tcfg).unwrap();
    assert!(!out.log.epochs.is_empty());
    assert!(out.log.epochs.iter().all(|e| e.val_weighted_f1.is_some()));
}

#[test]
fn best_checkpoint_tracks_validation_metric() {
    let corpus = SyntheticCorpus::generate(&SyntheticSpec::default());
    let (mcfg, tcfg) = overfit_config();
    let tcfg = TrainConfig { max_epochs: 15, target_train_accuracy: None, ..tcfg };
    let (tr, va) = corpus.dialogues.split_at(6);
    let out = train(tr, va, DialogueModel::new(mcfg, 3).unwrap(), &tcfg).unwrap();
    let best = out
        .log
        .epochs
        .iter()
        .map(|e| e.val_weighted_f1.unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(out.best.metric, best);
    assert_eq!(evaluate(va, &out.best.model).unwrap().weighted_f1, best);
}
