use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::params::{AttentionParams, DirectionParams, ModelParams};
use super::{Direction, ModelConfig};
use crate::numerics::{gru_cell, Dense, GruParams, Shape, Tape, Tensor, Var};
use crate::{Error, Result};

/// Recurrent state of one pass over a dialogue.
#[derive(Debug, Clone)]
pub struct DialogueStates {
    pub context: Var,
    /// Self state of every party, indexed by first appearance.
    pub selves: Vec<Var>,
    pub intra: Var,
    pub emotion: Var,
    /// `C_1 .. C_t` of the utterances processed so far.
    pub history: Vec<Var>,
}

/// `C_0` drawn uniformly from `(-0.1, 0.1)`.
pub fn initial_context(cfg: &ModelConfig, seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..cfg.context_dim).map(|_| rng.random_range(-0.1..0.1)).collect();
    Tensor::column(data)
}

impl DialogueStates {
    /// Random `C_0`; zero self, intra and emotion states; empty history.
    pub fn init(tape: &mut Tape<'_>, cfg: &ModelConfig, seed: u64, n_parties: usize) -> Self {
        let context = tape.constant(initial_context(cfg, seed));
        let zero_self = tape.zeros(Shape::col(cfg.self_dim));
        Self {
            context,
            selves: vec![zero_self; n_parties],
            intra: tape.zeros(Shape::col(cfg.intra_dim)),
            emotion: tape.zeros(Shape::col(cfg.emotion_dim)),
            history: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Speaker,
    Listener,
}

/// Attention weights over the context history, one vector per utterance
/// (empty for the first).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AttentionTrace {
    pub weights: Vec<Vec<f64>>,
}

/// Values of every state after one utterance, for inspection and tests.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub attention: Vec<f64>,
    pub attended: Vec<f64>,
    pub context: Vec<f64>,
    pub selves: Vec<Vec<f64>>,
    pub intra: Vec<f64>,
    pub emotion: Vec<f64>,
    pub updates: Vec<(usize, Role)>,
}

#[derive(Debug, Clone)]
pub struct DialogueGraph {
    pub logits: Vec<Var>,
    pub probs: Vec<Var>,
    pub trace: AttentionTrace,
    /// Forward-pass states, in utterance order.
    pub steps: Vec<StepRecord>,
    /// Reversed-pass states, in processing (reversed) order; empty when forward-only.
    pub backward_steps: Vec<StepRecord>,
}

/// Scalar scores `v . tanh(W C_i + b)` for each history entry.
pub fn attention_scores(tape: &mut Tape<'_>, p: &AttentionParams<Var>, history: &[Var]) -> Result<Vec<Var>> {
    let vt = tape.transpose(p.v);
    history
        .iter()
        .map(|&c| {
            let wc = tape.matmul(p.w, c)?;
            let pre = tape.add(wc, p.b)?;
            let act = tape.tanh(pre);
            tape.matmul(vt, act)
        })
        .collect()
}

/// Soft attention pooling `a_t = sum_i alpha_i C_i` with
/// `alpha = softmax(scores)`. An empty history yields a zero vector and no
/// weights.
pub fn attention_pool(
    tape: &mut Tape<'_>,
    p: &AttentionParams<Var>,
    history: &[Var],
    context_dim: usize,
) -> Result<(Var, Vec<f64>)> {
    if history.is_empty() {
        return Ok((tape.zeros(Shape::col(context_dim)), Vec::new()));
    }
    let scores = attention_scores(tape, p, history)?;
    let stacked = tape.concat(&scores)?;
    let alpha = tape.softmax(stacked);
    let rows: Vec<Var> = history.iter().map(|&c| tape.transpose(c)).collect();
    let hist = tape.concat(&rows)?; // n x H
    let hist_t = tape.transpose(hist); // H x n
    let pooled = tape.matmul(hist_t, alpha)?;
    Ok((pooled, tape.value(alpha).to_vec()))
}

/// `C_t = GRU_C(C_{t-1}, S ++ I ++ u_t)`.
pub fn context_step(
    tape: &mut Tape<'_>,
    gru: &GruParams<Var>,
    c_prev: Var,
    s_prev: Var,
    i_prev: Var,
    u: Var,
) -> Result<Var> {
    let x = tape.concat(&[s_prev, i_prev, u])?;
    gru_cell(tape, x, c_prev, gru)
}

/// Updates every party: the speaker through GRU_SS, all others through
/// GRU_SL, each with input `C_t ++ u_t`. Returns who was updated how.
pub fn self_speaker_step(
    tape: &mut Tape<'_>,
    p: &DirectionParams<Var>,
    selves: &mut [Var],
    speaker: usize,
    c_t: Var,
    u: Var,
) -> Result<Vec<(usize, Role)>> {
    if speaker >= selves.len() {
        return Err(Error::Data(alloc::format!(
            "speaker index {speaker} outside {} known parties",
            selves.len()
        )));
    }
    let x = tape.concat(&[c_t, u])?;
    let mut updates = Vec::with_capacity(selves.len());
    for (party, state) in selves.iter_mut().enumerate() {
        let (gru, role) = if party == speaker {
            (&p.speaker, Role::Speaker)
        } else {
            (&p.listener, Role::Listener)
        };
        *state = gru_cell(tape, x, *state, gru)?;
        updates.push((party, role));
    }
    Ok(updates)
}

/// `I_t = GRU_I(I_{t-1}, a_t ++ u_t)`.
pub fn intra_speaker_step(tape: &mut Tape<'_>, gru: &GruParams<Var>, i_prev: Var, a: Var, u: Var) -> Result<Var> {
    let x = tape.concat(&[a, u])?;
    gru_cell(tape, x, i_prev, gru)
}

/// `E_t = GRU_E(E_{t-1}, C_t ++ S_t ++ u_t)`, with `I_t` inserted before
/// `u_t` when `intra` is given.
pub fn emotion_step(
    tape: &mut Tape<'_>,
    gru: &GruParams<Var>,
    e_prev: Var,
    c_t: Var,
    s_t: Var,
    intra: Option<Var>,
    u: Var,
) -> Result<Var> {
    let x = match intra {
        Some(i) => tape.concat(&[c_t, s_t, i, u])?,
        None => tape.concat(&[c_t, s_t, u])?,
    };
    gru_cell(tape, x, e_prev, gru)
}

/// Residual two-layer head: `logits = fc2(relu(fc1(e)) + e)`.
/// Returns `(logits, softmax(logits))`.
pub fn classify(tape: &mut Tape<'_>, fc1: &Dense<Var>, fc2: &Dense<Var>, e: Var) -> Result<(Var, Var)> {
    let h = fc1.forward(tape, e)?;
    let h = tape.relu(h);
    let skip = tape.add(h, e)?;
    let logits = fc2.forward(tape, skip)?;
    let probs = tape.softmax(logits);
    Ok((logits, probs))
}

struct PassOutput {
    emotions: Vec<Var>,
    trace: AttentionTrace,
    steps: Vec<StepRecord>,
}

fn run_pass(
    tape: &mut Tape<'_>,
    cfg: &ModelConfig,
    p: &DirectionParams<Var>,
    seed: u64,
    order: &[usize],
    utterances: &[Var],
    parties: &[usize],
    n_parties: usize,
) -> Result<PassOutput> {
    let ab = cfg.ablations;
    let mut st = DialogueStates::init(tape, cfg, seed, n_parties);
    let zero_self = tape.zeros(Shape::col(cfg.self_dim));
    let zero_intra = tape.zeros(Shape::col(cfg.intra_dim));
    let mut out = PassOutput {
        emotions: Vec::with_capacity(order.len()),
        trace: AttentionTrace::default(),
        steps: Vec::with_capacity(order.len()),
    };
    for &t in order {
        let u = utterances[t];
        let speaker = parties[t];

        let (a, alpha) = if ab.no_attention_context {
            (tape.zeros(Shape::col(cfg.context_dim)), Vec::new())
        } else {
            attention_pool(tape, &p.attention, &st.history, cfg.context_dim)?
        };

        let s_prev = if ab.no_self_state { zero_self } else { st.selves[speaker] };
        let i_prev = if ab.no_intra_state { zero_intra } else { st.intra };
        st.context = context_step(tape, &p.context, st.context, s_prev, i_prev, u)?;
        st.history.push(st.context);

        let updates = if ab.no_self_state {
            Vec::new()
        } else {
            self_speaker_step(tape, p, &mut st.selves, speaker, st.context, u)?
        };

        if !ab.no_intra_state {
            st.intra = intra_speaker_step(tape, &p.intra, st.intra, a, u)?;
        }

        let s_t = if ab.no_self_state { zero_self } else { st.selves[speaker] };
        let intra_in = cfg.emotion_uses_intra.then_some(st.intra);
        st.emotion = emotion_step(tape, &p.emotion, st.emotion, st.context, s_t, intra_in, u)?;
        out.emotions.push(st.emotion);

        out.steps.push(StepRecord {
            attention: alpha.clone(),
            attended: tape.value(a).to_vec(),
            context: tape.value(st.context).to_vec(),
            selves: st.selves.iter().map(|&s| tape.value(s).to_vec()).collect(),
            intra: tape.value(st.intra).to_vec(),
            emotion: tape.value(st.emotion).to_vec(),
            updates,
        });
        out.trace.weights.push(alpha);
    }
    Ok(out)
}

/// Seed of the reversed pass's initial context, derived from the model seed.
fn backward_seed(seed: u64) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15
}

/// Runs the model over one dialogue. `utterances[t]` is `u_t` (a
/// `utterance_dim x 1` column) and `parties[t]` the speaker's party index
/// in `0..n_parties`.
pub fn forward_dialogue(
    tape: &mut Tape<'_>,
    cfg: &ModelConfig,
    params: &ModelParams<Var>,
    utterances: &[Var],
    parties: &[usize],
    n_parties: usize,
) -> Result<DialogueGraph> {
    if utterances.is_empty() {
        return Err(Error::EmptyDialogue);
    }
    if utterances.len() != parties.len() {
        return Err(Error::Dim {
            expected: utterances.len(),
            found: parties.len(),
        });
    }
    if let Some(&bad) = parties.iter().find(|&&p| p >= n_parties) {
        return Err(Error::Data(alloc::format!("party index {bad} >= party count {n_parties}")));
    }
    for &u in utterances {
        let s = tape.shape(u);
        if s != Shape::col(cfg.utterance_dim()) {
            return Err(Error::Dim {
                expected: cfg.utterance_dim(),
                found: s.len(),
            });
        }
    }

    let n = utterances.len();
    let forward_order: Vec<usize> = (0..n).collect();
    let fwd = run_pass(tape, cfg, &params.forward, cfg.state_seed, &forward_order, utterances, parties, n_parties)?;

    let (features, backward_steps) = match (cfg.direction, &params.backward) {
        (Direction::Forward, _) => (fwd.emotions.clone(), Vec::new()),
        (Direction::Bidirectional, Some(bp)) => {
            let reversed: Vec<usize> = (0..n).rev().collect();
            let bwd = run_pass(tape, cfg, bp, backward_seed(cfg.state_seed), &reversed, utterances, parties, n_parties)?;
            let mut feats = Vec::with_capacity(n);
            for t in 0..n {
                feats.push(tape.concat(&[fwd.emotions[t], bwd.emotions[n - 1 - t]])?);
            }
            (feats, bwd.steps)
        }
        (Direction::Bidirectional, None) => {
            return Err(Error::Config("bidirectional model is missing its reversed-pass parameters".into()))
        }
    };

    let mut logits = Vec::with_capacity(n);
    let mut probs = Vec::with_capacity(n);
    for e in features {
        let (l, p) = classify(tape, &params.fc1, &params.fc2, e)?;
        logits.push(l);
        probs.push(p);
    }
    Ok(DialogueGraph {
        logits,
        probs,
        trace: fwd.trace,
        steps: fwd.steps,
        backward_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Ablations, DialogueModel};
    use alloc::string::ToString;

    fn cfg() -> ModelConfig {
        ModelConfig::small(2, 3)
    }

    fn random_utts(tape: &mut Tape<'_>, cfg: &ModelConfig, n: usize, seed: u64) -> Vec<Var> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let d = cfg.utterance_dim();
                tape.constant(Tensor::column((0..d).map(|_| rng.random_range(-1.0..1.0)).collect()))
            })
            .collect()
    }

    fn run(cfg: &ModelConfig, params: &ModelParams, utts: &[Vec<f64>], parties: &[usize]) -> (Vec<Vec<f64>>, DialogueGraph) {
        let mut tape = Tape::new();
        let vars = params.bind(&mut tape);
        let us: Vec<Var> = utts.iter().map(|u| tape.constant(Tensor::column(u.clone()))).collect();
        let n_parties = parties.iter().max().map_or(0, |m| m + 1);
        let g = forward_dialogue(&mut tape, cfg, &vars, &us, parties, n_parties).unwrap();
        let probs = g.probs.iter().map(|&p| tape.value(p).to_vec()).collect();
        (probs, g)
    }

    fn utts(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
    }

    #[test]
    fn zero_params_halve_context_and_keep_others_zero() {
        let cfg = cfg();
        let params = ModelParams::zeros(&cfg).unwrap();
        let (probs, g) = run(&cfg, &params, &utts(4, 6, 1), &[0, 1, 0, 1]);
        let mut c = initial_context(&cfg, cfg.state_seed).into_data();
        for step in &g.steps {
            c.iter_mut().for_each(|x| *x *= 0.5);
            assert_eq!(step.context, c);
            assert!(step.intra.iter().chain(&step.emotion).all(|&x| x == 0.0));
        }
        for p in probs {
            assert!(p.iter().all(|&x| (x - 1.0 / 7.0).abs() < 1e-15));
        }
    }

    #[test]
    fn attention_basic_properties() {
        let cfg = cfg();
        let params = ModelParams::init(&cfg, 4).unwrap();
        let mut tape = Tape::new();
        let vars = params.bind(&mut tape);
        let (a, w) = attention_pool(&mut tape, &vars.forward.attention, &[], cfg.context_dim).unwrap();
        assert!(w.is_empty());
        assert_eq!(tape.value(a), &[0.0; 3]);

        let c = tape.constant(Tensor::column(vec![0.3, -0.2, 0.9]));
        let (a, w) = attention_pool(&mut tape, &vars.forward.attention, &[c], 3).unwrap();
        assert_eq!(w, vec![1.0]);
        assert_eq!(tape.value(a), tape.value(c));

        let (_, w) = attention_pool(&mut tape, &vars.forward.attention, &[c, c, c, c], 3).unwrap();
        assert!(w.iter().all(|&x| (x - 0.25).abs() < 1e-15));

        let hist = random_utts(&mut tape, &ModelConfig::small(1, 3), 5, 3);
        let (_, w) = attention_pool(&mut tape, &vars.forward.attention, &hist, 3).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn every_party_updated_once_per_step() {
        let cfg = cfg();
        let params = ModelParams::init(&cfg, 2).unwrap();
        let parties = [0, 1, 2, 1, 0];
        let (_, g) = run(&cfg, &params, &utts(5, 6, 2), &parties);
        for (step, &spk) in g.steps.iter().zip(&parties) {
            assert_eq!(step.updates.len(), 3);
            for &(p, role) in &step.updates {
                assert_eq!(role == Role::Speaker, p == spk);
            }
        }
        assert_eq!(g.trace.weights[0].len(), 0);
        assert_eq!(g.trace.weights[4].len(), 4);
    }

    #[test]
    fn forward_mode_is_causal() {
        let cfg = cfg();
        let params = ModelParams::init(&cfg, 6).unwrap();
        let base = utts(5, 6, 5);
        let (p0, _) = run(&cfg, &params, &base, &[0, 1, 0, 1, 0]);
        let mut changed = base.clone();
        changed[3] = vec![0.9; 6];
        let (p1, _) = run(&cfg, &params, &changed, &[0, 1, 0, 1, 0]);
        assert_eq!(p0[..3], p1[..3]);
        assert_ne!(p0[3], p1[3]);
    }

    #[test]
    fn bidirectional_sees_the_future() {
        let cfg = ModelConfig {
            direction: Direction::Bidirectional,
            ..cfg()
        };
        let params = ModelParams::init(&cfg, 6).unwrap();
        let base = utts(4, 6, 5);
        let (p0, g) = run(&cfg, &params, &base, &[0, 1, 0, 1]);
        assert_eq!(g.backward_steps.len(), 4);
        let mut changed = base.clone();
        changed[3] = vec![0.9; 6];
        let (p1, _) = run(&cfg, &params, &changed, &[0, 1, 0, 1]);
        assert_ne!(p0[0], p1[0]);
    }

    #[test]
    fn party_names_do_not_matter() {
        use crate::dialogue::{Dialogue, Turn, UtteranceInput};
        use crate::encoder::UtteranceVector;
        let cfg = cfg();
        let model = DialogueModel::new(cfg, 8).unwrap();
        let us = utts(5, 6, 9);
        let make = |names: [&str; 3]| Dialogue {
            id: "d".into(),
            turns: [0, 1, 2, 0, 1]
                .iter()
                .zip(&us)
                .map(|(&p, u)| Turn {
                    speaker: names[p].to_string(),
                    input: UtteranceInput::Vector(UtteranceVector(u.clone())),
                    label: None,
                })
                .collect(),
        };
        let a = model.predict(&make(["ann", "bob", "cy"])).unwrap();
        let b = model.predict(&make(["zed", "amy", "kim"])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ablations_freeze_their_states() {
        let cfg = ModelConfig {
            ablations: Ablations {
                no_attention_context: true,
                no_self_state: true,
                no_intra_state: true,
            },
            ..cfg()
        };
        let params = ModelParams::init(&cfg, 3).unwrap();
        let (probs, g) = run(&cfg, &params, &utts(4, 6, 4), &[0, 1, 1, 0]);
        for step in &g.steps {
            assert!(step.updates.is_empty());
            assert!(step.attention.is_empty());
            assert!(step.attended.iter().all(|&x| x == 0.0));
            assert!(step.selves.iter().flatten().all(|&x| x == 0.0));
            assert!(step.intra.iter().all(|&x| x == 0.0));
        }
        assert!(probs.iter().all(|p| (p.iter().sum::<f64>() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn input_validation() {
        let cfg = cfg();
        let params = ModelParams::init(&cfg, 0).unwrap();
        let mut tape = Tape::new();
        let vars = params.bind(&mut tape);
        assert_eq!(
            forward_dialogue(&mut tape, &cfg, &vars, &[], &[], 0).unwrap_err(),
            Error::EmptyDialogue
        );
        let u = tape.zeros(Shape::col(5));
        assert!(matches!(
            forward_dialogue(&mut tape, &cfg, &vars, &[u], &[0], 1),
            Err(Error::Dim { .. })
        ));
        let u = tape.zeros(Shape::col(6));
        assert!(matches!(
            forward_dialogue(&mut tape, &cfg, &vars, &[u], &[1], 1),
            Err(Error::Data(_))
        ));
    }
}
