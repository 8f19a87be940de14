//! Finite-difference cases: every primitive, the GRU cell, the statistical
//! unit and whole-dialogue losses. Each returns `(name, max relative error)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use convo_affect_core::dialogue::{Dialogue, Turn, UtteranceInput};
use convo_affect_core::encoder::{statistical_unit_on_tape, EmbedderKind};
use convo_affect_core::frontend::SegmentPatch;
use convo_affect_core::model::{dialogue_graph, forward_dialogue, Ablations, Direction, ModelConfig, ModelParams};
use convo_affect_core::numerics::{gru_cell, l2_penalty, GruParams, Reduce, Shape, Tape, Tensor, Var};

use super::{contract, fd_check};

fn rand_t(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    Tensor::new(
        Shape::new(rows, cols),
        (0..rows * cols).map(|_| rng.random_range(-1.5..1.5)).collect(),
    )
}

pub fn primitives(seed: u64) -> Vec<(&'static str, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = rand_t(&mut rng, 3, 4);
    let b = rand_t(&mut rng, 4, 2);
    let c = rand_t(&mut rng, 3, 4);
    let v = rand_t(&mut rng, 5, 1);
    let w34 = rand_t(&mut rng, 3, 4);
    let w32 = rand_t(&mut rng, 3, 2);
    let w43 = rand_t(&mut rng, 4, 3);
    let w51 = rand_t(&mut rng, 5, 1);
    let w41 = rand_t(&mut rng, 4, 1);
    let target = rng.random_range(0..5);
    let k = rng.random_range(-2.0..2.0);

    let mut out = Vec::new();
    let mut case = |name, inputs: &[Tensor], f: &dyn Fn(&mut Tape<'_>, &[Var]) -> Var| {
        out.push((name, fd_check(inputs, |t, x| f(t, x))));
    };
    case("matmul", &[a.clone(), b.clone()], &|t, x| {
        let m = t.matmul(x[0], x[1]).unwrap();
        contract(t, m, &w32)
    });
    case("add", &[a.clone(), c.clone()], &|t, x| {
        let m = t.add(x[0], x[1]).unwrap();
        contract(t, m, &w34)
    });
    case("sub", &[a.clone(), c.clone()], &|t, x| {
        let m = t.sub(x[0], x[1]).unwrap();
        contract(t, m, &w34)
    });
    case("mul", &[a.clone(), c.clone()], &|t, x| {
        let m = t.mul(x[0], x[1]).unwrap();
        contract(t, m, &w34)
    });
    case("scale", std::slice::from_ref(&a), &|t, x| {
        let m = t.scale(x[0], k);
        contract(t, m, &w34)
    });
    case("add_scalar", std::slice::from_ref(&a), &|t, x| {
        let m = t.add_scalar(x[0], k);
        let m = t.mul(m, m).unwrap();
        contract(t, m, &w34)
    });
    case("tanh", std::slice::from_ref(&a), &|t, x| {
        let m = t.tanh(x[0]);
        contract(t, m, &w34)
    });
    case("sigmoid", std::slice::from_ref(&a), &|t, x| {
        let m = t.sigmoid(x[0]);
        contract(t, m, &w34)
    });
    case("relu", std::slice::from_ref(&a), &|t, x| {
        let m = t.relu(x[0]);
        contract(t, m, &w34)
    });
    case("softmax", std::slice::from_ref(&v), &|t, x| {
        let m = t.softmax(x[0]);
        contract(t, m, &w51)
    });
    case("log_softmax", std::slice::from_ref(&v), &|t, x| {
        let m = t.log_softmax(x[0]);
        contract(t, m, &w51)
    });
    case("concat", &[a.clone(), c.clone()], &|t, x| {
        let m = t.concat(&[x[0], x[1]]).unwrap();
        let m = t.tanh(m);
        t.sum(m)
    });
    case("transpose", std::slice::from_ref(&a), &|t, x| {
        let m = t.transpose(x[0]);
        contract(t, m, &w43)
    });
    case("sum", std::slice::from_ref(&a), &|t, x| {
        let m = t.mul(x[0], x[0]).unwrap();
        t.sum(m)
    });
    case("pick", std::slice::from_ref(&v), &|t, x| {
        let m = t.tanh(x[0]);
        t.pick(m, target).unwrap()
    });
    case("reduce_mean", std::slice::from_ref(&a), &|t, x| {
        let m = t.reduce_rows(x[0], Reduce::Mean).unwrap();
        contract(t, m, &w41)
    });
    case("reduce_max", std::slice::from_ref(&a), &|t, x| {
        let m = t.reduce_rows(x[0], Reduce::Max).unwrap();
        contract(t, m, &w41)
    });
    case("reduce_min", std::slice::from_ref(&a), &|t, x| {
        let m = t.reduce_rows(x[0], Reduce::Min).unwrap();
        contract(t, m, &w41)
    });
    case("cross_entropy", std::slice::from_ref(&v), &|t, x| t.cross_entropy(x[0], target).unwrap());
    case("l2_penalty", &[a.clone(), b.clone()], &|t, x| l2_penalty(t, x, 3e-4).unwrap());
    out
}

pub fn gru(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (input, hidden) = (4, 3);
    let p = GruParams::init(input, hidden, &mut rng);
    let mut inputs: Vec<Tensor> = p.visit_all();
    inputs.push(rand_t(&mut rng, input, 1));
    inputs.push(rand_t(&mut rng, hidden, 1));
    let w = rand_t(&mut rng, hidden, 1);
    fd_check(&inputs, |t, x| {
        let mut it = x.iter().copied();
        let vars = p.map(&mut |_| it.next().unwrap());
        let h = gru_cell(t, x[9], x[10], &vars).unwrap();
        let h = gru_cell(t, x[9], h, &vars).unwrap();
        contract(t, h, &w)
    })
}

trait VisitAll {
    fn visit_all(&self) -> Vec<Tensor>;
}

impl VisitAll for GruParams {
    fn visit_all(&self) -> Vec<Tensor> {
        let mut v = Vec::new();
        self.visit("g", &mut v);
        v.into_iter().map(|(_, t)| t.clone()).collect()
    }
}

pub fn statistical_unit(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<Tensor> = (0..4).map(|_| rand_t(&mut rng, 3, 1)).collect();
    let w = rand_t(&mut rng, 9, 1);
    fd_check(&inputs, |t, x| {
        let u = statistical_unit_on_tape(t, x).unwrap();
        contract(t, u, &w)
    })
}

pub fn random_utts(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

/// Summed cross-entropy of a dialogue, differentiated with respect to every
/// parameter and every utterance vector.
pub fn dialogue_loss(seed: u64, cfg: &ModelConfig, parties: &[usize]) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = ModelParams::init(cfg, seed).unwrap();
    let utts = random_utts(&mut rng, parties.len(), cfg.utterance_dim());
    let labels: Vec<usize> = parties.iter().map(|_| rng.random_range(0..cfg.n_classes)).collect();
    let n_parties = parties.iter().max().unwrap() + 1;
    let mut inputs: Vec<Tensor> = params.tensors().into_iter().cloned().collect();
    let n_params = inputs.len();
    inputs.extend(utts.iter().map(|u| Tensor::column(u.clone())));
    fd_check(&inputs, |t, x| {
        let mut it = x[..n_params].iter().copied();
        let vars = params.map(&mut |_| it.next().unwrap());
        let g = forward_dialogue(t, cfg, &vars, &x[n_params..], parties, n_parties).unwrap();
        let mut total: Option<Var> = None;
        for (&l, &y) in g.logits.iter().zip(&labels) {
            let ce = t.cross_entropy(l, y).unwrap();
            total = Some(match total {
                Some(s) => t.add(s, ce).unwrap(),
                None => ce,
            });
        }
        total.unwrap()
    })
}

/// Patch input through the trainable linear embedder.
pub fn linear_embedder_loss(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = ModelConfig {
        embedder: EmbedderKind::Linear,
        patch_len: 6,
        ..ModelConfig::small(2, 2)
    };
    let params = ModelParams::init(&cfg, seed).unwrap();
    let dialogue = Dialogue {
        id: "g".into(),
        turns: (0..3)
            .map(|t| Turn {
                speaker: format!("p{}", t % 2),
                input: UtteranceInput::Patches(
                    (0..1 + t)
                        .map(|_| SegmentPatch::new(2, 3, (0..6).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap())
                        .collect(),
                ),
                label: Some(rng.random_range(0..7)),
            })
            .collect(),
    };
    let labels = dialogue.labels().unwrap();
    let inputs: Vec<Tensor> = params.tensors().into_iter().cloned().collect();
    fd_check(&inputs, |t, x| {
        let mut it = x.iter().copied();
        let vars = params.map(&mut |_| it.next().unwrap());
        let g = dialogue_graph(t, &cfg, &vars, &dialogue).unwrap();
        let ces: Vec<Var> = g.logits.iter().zip(&labels).map(|(&l, &y)| t.cross_entropy(l, y).unwrap()).collect();
        let all = t.concat(&ces).unwrap();
        t.sum(all)
    })
}

pub fn small() -> ModelConfig {
    ModelConfig::small(2, 3)
}

pub fn variants() -> Vec<(&'static str, ModelConfig)> {
    vec![
        ("forward", small()),
        (
            "bidirectional",
            ModelConfig {
                direction: Direction::Bidirectional,
                ..small()
            },
        ),
        (
            "emotion_uses_intra",
            ModelConfig {
                emotion_uses_intra: true,
                ..small()
            },
        ),
        (
            "all_ablations",
            ModelConfig {
                ablations: Ablations {
                    no_attention_context: true,
                    no_self_state: true,
                    no_intra_state: true,
                },
                ..small()
            },
        ),
    ]
}
