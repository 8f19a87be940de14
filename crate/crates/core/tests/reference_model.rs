mod support;

use convo_affect_core::model::{forward_dialogue, ModelConfig, ModelParams};
use convo_affect_core::numerics::{Tape, Tensor, Var};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::{gradcases::random_utts, reference_forward};

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Largest per-coordinate gap between the model and the reference.
pub fn compare(cfg: &ModelConfig, seed: u64, parties: &[usize]) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = ModelParams::init(cfg, seed).unwrap();
    let utts = random_utts(&mut rng, parties.len(), cfg.utterance_dim());
    let expected = reference_forward(cfg, &params, &utts, parties);

    let mut tape = Tape::new();
    let vars = params.bind(&mut tape);
    let us: Vec<Var> = utts.iter().map(|u| tape.constant(Tensor::column(u.clone()))).collect();
    let n_parties = parties.iter().max().unwrap() + 1;
    let g = forward_dialogue(&mut tape, cfg, &vars, &us, parties, n_parties).unwrap();

    let mut worst = 0.0f64;
    for (t, (step, want)) in g.steps.iter().zip(&expected).enumerate() {
        assert_eq!(step.attention.len(), want.alpha.len());
        worst = worst
            .max(max_diff(&step.attention, &want.alpha))
            .max(max_diff(&step.attended, &want.attended))
            .max(max_diff(&step.context, &want.context))
            .max(max_diff(&step.intra, &want.intra))
            .max(max_diff(&step.emotion, &want.emotion))
            .max(max_diff(tape.value(g.probs[t]), &want.probs));
        for (s, w) in step.selves.iter().zip(&want.selves) {
            worst = worst.max(max_diff(s, w));
        }
    }
    worst
}

#[test]
fn three_utterances_two_parties() {
    for seed in 0..10 {
        let d = compare(&ModelConfig::small(3, 5), seed, &[0, 1, 0]);
        assert!(d < 1e-10, "seed {seed}: {d:e}");
    }
}

#[test]
fn five_utterances_three_parties() {
    for seed in 0..10 {
        let d = compare(&ModelConfig::small(4, 6), seed, &[0, 1, 2, 0, 2]);
        assert!(d < 1e-10, "seed {seed}: {d:e}");
    }
}

#[test]
fn distinct_hidden_sizes() {
    let cfg = ModelConfig {
        context_dim: 4,
        self_dim: 3,
        intra_dim: 5,
        emotion_dim: 6,
        attention_dim: 2,
        ..ModelConfig::small(2, 1)
    };
    let d = compare(&cfg, 3, &[1, 0, 1, 1, 0].map(|p| p % 2));
    assert!(d < 1e-10, "{d:e}");
}
