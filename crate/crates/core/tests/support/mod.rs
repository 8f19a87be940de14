//! Independent reference implementations shared by integration tests.
#![allow(dead_code)]

use convo_affect_core::model::{initial_context, ModelConfig, ModelParams};
use convo_affect_core::numerics::{GruParams, Tape, Tensor, Var};

// ---------- finite differences ----------

pub const FD_EPS: f64 = 1e-5;
/// Denominator floor for the relative error, so gradients near zero are
/// compared on an absolute scale.
pub const FD_FLOOR: f64 = 1e-3;

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(FD_FLOOR)
}

/// Max relative error between the tape gradient of a scalar `build` output
/// and central differences, over every element of every input.
pub fn fd_check<F>(inputs: &[Tensor], build: F) -> f64
where
    F: Fn(&mut Tape<'_>, &[Var]) -> Var,
{
    let eval = |xs: &[Tensor]| -> f64 {
        let mut tape = Tape::new();
        let vars: Vec<Var> = xs.iter().map(|x| tape.variable(x.clone())).collect();
        let out = build(&mut tape, &vars);
        tape.value(out)[0]
    };
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|x| tape.variable(x.clone())).collect();
    let out = build(&mut tape, &vars);
    let grads = tape.backward(out).expect("scalar output");
    let mut worst = 0.0f64;
    for (i, x) in inputs.iter().enumerate() {
        let analytic = grads.tensor(vars[i]);
        for k in 0..x.data().len() {
            let mut xs = inputs.to_vec();
            xs[i].data_mut()[k] += FD_EPS;
            let up = eval(&xs);
            xs[i].data_mut()[k] -= 2.0 * FD_EPS;
            let down = eval(&xs);
            let numeric = (up - down) / (2.0 * FD_EPS);
            worst = worst.max(rel_err(analytic.data()[k], numeric));
        }
    }
    worst
}

/// Reduces any tensor to a scalar with fixed weights so every output
/// coordinate contributes a distinct gradient.
pub fn contract(tape: &mut Tape<'_>, x: Var, weights: &Tensor) -> Var {
    let w = tape.constant(weights.clone());
    let m = tape.mul(x, w).expect("same shape");
    tape.sum(m)
}

// ---------- straight-line reference model ----------

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn matvec(m: &Tensor, x: &[f64]) -> Vec<f64> {
    let s = m.shape();
    assert_eq!(s.cols, x.len());
    (0..s.rows)
        .map(|r| (0..s.cols).map(|c| m.get(r, c) * x[c]).sum())
        .collect()
}

fn add3(a: &[f64], b: &[f64], c: &[f64]) -> Vec<f64> {
    a.iter().zip(b).zip(c).map(|((x, y), z)| x + y + z).collect()
}

pub fn gru(p: &GruParams, x: &[f64], h: &[f64]) -> Vec<f64> {
    let z: Vec<f64> = add3(&matvec(&p.w_z, x), &matvec(&p.u_z, h), p.b_z.data())
        .into_iter()
        .map(sigmoid)
        .collect();
    let r: Vec<f64> = add3(&matvec(&p.w_r, x), &matvec(&p.u_r, h), p.b_r.data())
        .into_iter()
        .map(sigmoid)
        .collect();
    let rh: Vec<f64> = r.iter().zip(h).map(|(a, b)| a * b).collect();
    let cand: Vec<f64> = add3(&matvec(&p.w_h, x), &matvec(&p.u_h, &rh), p.b_h.data())
        .into_iter()
        .map(f64::tanh)
        .collect();
    (0..h.len()).map(|k| (1.0 - z[k]) * h[k] + z[k] * cand[k]).collect()
}

pub fn softmax(x: &[f64]) -> Vec<f64> {
    let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn cat(parts: &[&[f64]]) -> Vec<f64> {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

#[derive(Debug, Clone)]
pub struct RefStep {
    pub alpha: Vec<f64>,
    pub attended: Vec<f64>,
    pub context: Vec<f64>,
    pub selves: Vec<Vec<f64>>,
    pub intra: Vec<f64>,
    pub emotion: Vec<f64>,
    pub probs: Vec<f64>,
}

/// Forward-only model, no ablations, emotion input `C ++ S ++ u`.
pub fn reference_forward(cfg: &ModelConfig, p: &ModelParams, utts: &[Vec<f64>], parties: &[usize]) -> Vec<RefStep> {
    let d = &p.forward;
    let n_parties = parties.iter().max().unwrap() + 1;
    let mut c = initial_context(cfg, cfg.state_seed).into_data();
    let mut selves = vec![vec![0.0; cfg.self_dim]; n_parties];
    let mut intra = vec![0.0; cfg.intra_dim];
    let mut emo = vec![0.0; cfg.emotion_dim];
    let mut history: Vec<Vec<f64>> = Vec::new();
    let mut out = Vec::new();
    for (u, &spk) in utts.iter().zip(parties) {
        // attention over C_1..C_{t-1}
        let (alpha, attended) = if history.is_empty() {
            (Vec::new(), vec![0.0; cfg.context_dim])
        } else {
            let scores: Vec<f64> = history
                .iter()
                .map(|h| {
                    let pre: Vec<f64> = matvec(&d.attention.w, h)
                        .iter()
                        .zip(d.attention.b.data())
                        .map(|(a, b)| (a + b).tanh())
                        .collect();
                    pre.iter().zip(d.attention.v.data()).map(|(a, b)| a * b).sum()
                })
                .collect();
            let alpha = softmax(&scores);
            let mut a = vec![0.0; cfg.context_dim];
            for (w, h) in alpha.iter().zip(&history) {
                for k in 0..a.len() {
                    a[k] += w * h[k];
                }
            }
            (alpha, a)
        };
        c = gru(&d.context, &cat(&[&selves[spk], &intra, u]), &c);
        history.push(c.clone());
        let x = cat(&[&c, u]);
        for (q, s) in selves.iter_mut().enumerate() {
            let cell = if q == spk { &d.speaker } else { &d.listener };
            *s = gru(cell, &x, s);
        }
        intra = gru(&d.intra, &cat(&[&attended, u]), &intra);
        emo = gru(&d.emotion, &cat(&[&c, &selves[spk], u]), &emo);
        let h: Vec<f64> = add3(&matvec(&p.fc1.w, &emo), p.fc1.b.data(), &vec![0.0; emo.len()])
            .into_iter()
            .map(|v| v.max(0.0))
            .collect();
        let skip: Vec<f64> = h.iter().zip(&emo).map(|(a, b)| a + b).collect();
        let logits: Vec<f64> = matvec(&p.fc2.w, &skip).iter().zip(p.fc2.b.data()).map(|(a, b)| a + b).collect();
        out.push(RefStep {
            alpha,
            attended,
            context: c.clone(),
            selves: selves.clone(),
            intra: intra.clone(),
            emotion: emo.clone(),
            probs: softmax(&logits),
        });
    }
    out
}

// ---------- metrics from raw counts ----------

/// Weighted F1 from per-class TP/FP/FN tallies collected in one pass.
pub fn oracle_weighted_f1(preds: &[usize], labels: &[usize], n: usize) -> (f64, Vec<Vec<u64>>) {
    let mut tp = vec![0u64; n];
    let mut fp = vec![0u64; n];
    let mut fn_ = vec![0u64; n];
    let mut conf = vec![vec![0u64; n]; n];
    for (&p, &l) in preds.iter().zip(labels) {
        conf[l][p] += 1;
        if p == l {
            tp[l] += 1;
        } else {
            fp[p] += 1;
            fn_[l] += 1;
        }
    }
    let total = labels.len() as f64;
    let mut w = 0.0;
    for c in 0..n {
        let denom = 2 * tp[c] + fp[c] + fn_[c];
        let f1 = if denom == 0 { 0.0 } else { 2.0 * tp[c] as f64 / denom as f64 };
        w += (tp[c] + fn_[c]) as f64 / total * f1;
    }
    (w, conf)
}

// ---------- frontend arithmetic ----------

pub fn expected_frames(len: usize) -> usize {
    if len < 400 {
        1
    } else {
        1 + (len - 400) / 160
    }
}

pub fn expected_segments(frames: usize) -> usize {
    frames.div_ceil(96).max(1)
}

pub mod gradcases;
