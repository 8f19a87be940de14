use alloc::borrow::Cow;
use alloc::vec;
use alloc::vec::Vec;

use super::tensor::{Shape, Tensor};
use crate::{Error, Result};

/// Handle to a node recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Row-wise reductions of an `L x D` matrix into a `D x 1` column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduce {
    Mean,
    Max,
    Min,
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Tanh(Var),
    Sigmoid(Var),
    Relu(Var),
    Softmax(Var),
    LogSoftmax(Var),
    Concat(Vec<Var>),
    Transpose(Var),
    Sum(Var),
    Pick(Var, usize),
    // `arg[d]` is the winning row for column `d` (unused for Mean).
    Reduce {
        input: Var,
        kind: Reduce,
        arg: Vec<usize>,
    },
}

struct Node<'p> {
    value: Cow<'p, [f64]>,
    shape: Shape,
    op: Op,
    requires_grad: bool,
}

/// Gradients produced by one backward pass.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    shapes: Vec<Shape>,
    report: BackwardReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BackwardReport {
    /// Nodes whose backward rule ran.
    pub visited: usize,
    /// Nodes on the tape that are ancestors of the loss and require a gradient.
    pub reachable: usize,
}

impl Gradients {
    pub fn get(&self, var: Var) -> Option<&[f64]> {
        self.grads.get(var.0)?.as_deref()
    }

    /// Gradient as a tensor; zeros when the loss does not depend on `var`.
    pub fn tensor(&self, var: Var) -> Tensor {
        let shape = self.shapes[var.0];
        match self.get(var) {
            Some(g) => Tensor::new(shape, g.to_vec()),
            None => Tensor::zeros(shape),
        }
    }

    pub fn report(&self) -> BackwardReport {
        self.report
    }
}

/// A single-threaded record of primitive applications.
///
/// Parameters are borrowed for the lifetime of the tape, so binding a large
/// model costs nothing. A tape supports exactly one backward pass.
#[derive(Default)]
pub struct Tape<'p> {
    nodes: Vec<Node<'p>>,
    consumed: bool,
}

fn shape_err(op: &'static str, lhs: Shape, rhs: Shape) -> Error {
    Error::Shape { op, lhs, rhs }
}

impl<'p> Tape<'p> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Cow<'p, [f64]>, shape: Shape, op: Op, requires_grad: bool) -> Var {
        debug_assert_eq!(value.len(), shape.len());
        self.nodes.push(Node {
            value,
            shape,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn push_op(&mut self, value: Vec<f64>, shape: Shape, op: Op, inputs: &[Var]) -> Var {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.push(Cow::Owned(value), shape, op, requires_grad)
    }

    /// Trainable leaf borrowing the parameter's storage.
    pub fn param(&mut self, t: &'p Tensor) -> Var {
        self.push(Cow::Borrowed(t.data()), t.shape(), Op::Leaf, true)
    }

    /// Owned leaf that receives a gradient.
    pub fn variable(&mut self, t: Tensor) -> Var {
        let shape = t.shape();
        self.push(Cow::Owned(t.into_data()), shape, Op::Leaf, true)
    }

    pub fn constant(&mut self, t: Tensor) -> Var {
        let shape = t.shape();
        self.push(Cow::Owned(t.into_data()), shape, Op::Leaf, false)
    }

    pub fn zeros(&mut self, shape: Shape) -> Var {
        self.constant(Tensor::zeros(shape))
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> Shape {
        self.nodes[v.0].shape
    }

    pub fn tensor(&self, v: Var) -> Tensor {
        Tensor::new(self.shape(v), self.value(v).to_vec())
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.cols != sb.rows {
            return Err(shape_err("matmul", sa, sb));
        }
        let out = Shape::new(sa.rows, sb.cols);
        let (av, bv) = (self.value(a), self.value(b));
        let mut value = vec![0.0; out.len()];
        for i in 0..sa.rows {
            let arow = &av[i * sa.cols..(i + 1) * sa.cols];
            let orow = &mut value[i * out.cols..(i + 1) * out.cols];
            for (k, &aik) in arow.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                let brow = &bv[k * sb.cols..(k + 1) * sb.cols];
                for (o, &bkj) in orow.iter_mut().zip(brow) {
                    *o += aik * bkj;
                }
            }
        }
        Ok(self.push_op(value, out, Op::MatMul(a, b), &[a, b]))
    }

    fn zip_with(&mut self, a: Var, b: Var, name: &'static str, f: impl Fn(f64, f64) -> f64, op: Op) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(shape_err(name, sa, sb));
        }
        let value = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(&x, &y)| f(x, y))
            .collect();
        Ok(self.push_op(value, sa, op, &[a, b]))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with(a, b, "add", |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with(a, b, "sub", |x, y| x - y, Op::Sub(a, b))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with(a, b, "mul", |x, y| x * y, Op::Mul(a, b))
    }

    fn map(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let value = self.value(a).iter().map(|&x| f(x)).collect();
        let shape = self.shape(a);
        self.push_op(value, shape, op, &[a])
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        self.map(a, |x| c * x, Op::Scale(a, c))
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        self.map(a, |x| x + c, Op::AddScalar(a))
    }

    /// `1 - a`, elementwise.
    pub fn one_minus(&mut self, a: Var) -> Var {
        let neg = self.scale(a, -1.0);
        self.add_scalar(neg, 1.0)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.map(a, libm::tanh, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.map(a, sigmoid, Op::Sigmoid(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.map(a, |x| if x > 0.0 { x } else { 0.0 }, Op::Relu(a))
    }

    /// Softmax over all elements of `a`.
    pub fn softmax(&mut self, a: Var) -> Var {
        let value = softmax(self.value(a));
        let shape = self.shape(a);
        self.push_op(value, shape, Op::Softmax(a), &[a])
    }

    pub fn log_softmax(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let lse = log_sum_exp(x);
        let value = x.iter().map(|&v| v - lse).collect();
        let shape = self.shape(a);
        self.push_op(value, shape, Op::LogSoftmax(a), &[a])
    }

    /// Stacks inputs vertically; every input must have the same column count.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts
            .first()
            .ok_or_else(|| shape_err("concat", Shape::new(0, 0), Shape::new(0, 0)))?;
        let cols = self.shape(first).cols;
        let mut rows = 0;
        for &p in parts {
            let s = self.shape(p);
            if s.cols != cols {
                return Err(shape_err("concat", self.shape(first), s));
            }
            rows += s.rows;
        }
        let mut value = Vec::with_capacity(rows * cols);
        for &p in parts {
            value.extend_from_slice(self.value(p));
        }
        Ok(self.push_op(value, Shape::new(rows, cols), Op::Concat(parts.to_vec()), parts))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let s = self.shape(a);
        let value = transpose(self.value(a), s);
        self.push_op(value, s.transposed(), Op::Transpose(a), &[a])
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let total = self.value(a).iter().sum();
        self.push_op(vec![total], Shape::scalar(), Op::Sum(a), &[a])
    }

    /// Scalar element `index` of `a` in row-major order.
    pub fn pick(&mut self, a: Var, index: usize) -> Result<Var> {
        let s = self.shape(a);
        if index >= s.len() {
            return Err(shape_err("pick", s, Shape::col(index + 1)));
        }
        let v = self.value(a)[index];
        Ok(self.push_op(vec![v], Shape::scalar(), Op::Pick(a, index), &[a]))
    }

    /// Reduces an `L x D` matrix over its rows into a `D x 1` column.
    ///
    /// Max and min route their gradient to the first row achieving the extreme.
    pub fn reduce_rows(&mut self, a: Var, kind: Reduce) -> Result<Var> {
        let s = self.shape(a);
        if s.rows == 0 {
            return Err(shape_err("reduce_rows", s, Shape::new(1, s.cols)));
        }
        let x = self.value(a);
        let mut value = vec![0.0; s.cols];
        let mut arg = vec![0usize; s.cols];
        for d in 0..s.cols {
            let column = (0..s.rows).map(|l| x[l * s.cols + d]);
            match kind {
                Reduce::Mean => value[d] = column.sum::<f64>() / s.rows as f64,
                Reduce::Max | Reduce::Min => {
                    let mut best = x[d];
                    for (l, v) in column.enumerate().skip(1) {
                        let better = match kind {
                            Reduce::Max => v > best,
                            _ => v < best,
                        };
                        if better {
                            best = v;
                            arg[d] = l;
                        }
                    }
                    value[d] = best;
                }
            }
        }
        Ok(self.push_op(value, Shape::col(s.cols), Op::Reduce { input: a, kind, arg }, &[a]))
    }

    /// `-log softmax(logits)[target]`.
    pub fn cross_entropy(&mut self, logits: Var, target: usize) -> Result<Var> {
        let logp = self.log_softmax(logits);
        let picked = self.pick(logp, target)?;
        Ok(self.scale(picked, -1.0))
    }

    /// Runs reverse-mode differentiation from a scalar `loss`.
    ///
    /// Each node that is an ancestor of the loss and requires a gradient is
    /// visited exactly once, in reverse recording order.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients> {
        if self.consumed {
            return Err(Error::TapeConsumed);
        }
        let ls = self.shape(loss);
        if ls != Shape::scalar() {
            return Err(Error::NotScalar(ls));
        }
        self.consumed = true;

        let n = self.nodes.len();
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; n];
        let mut visited = 0;
        if self.nodes[loss.0].requires_grad {
            grads[loss.0] = Some(vec![1.0]);
        }
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            visited += 1;
            self.propagate(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        let reachable = grads.iter().filter(|g| g.is_some()).count();
        Ok(Gradients {
            grads,
            shapes: self.nodes.iter().map(|n| n.shape).collect(),
            report: BackwardReport { visited, reachable },
        })
    }

    fn propagate(&self, i: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[i];
        let y = &node.value[..];
        let mut acc = |v: Var, f: &mut dyn FnMut(&mut [f64])| {
            let inp = &self.nodes[v.0];
            if !inp.requires_grad {
                return;
            }
            let slot = grads[v.0].get_or_insert_with(|| vec![0.0; inp.shape.len()]);
            f(slot);
        };
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (sa, sb) = (self.shape(*a), self.shape(*b));
                let (av, bv) = (self.value(*a), self.value(*b));
                let n = sb.cols;
                acc(*a, &mut |ga| {
                    for r in 0..sa.rows {
                        let grow = &g[r * n..(r + 1) * n];
                        for k in 0..sa.cols {
                            let brow = &bv[k * n..(k + 1) * n];
                            ga[r * sa.cols + k] += grow.iter().zip(brow).map(|(x, y)| x * y).sum::<f64>();
                        }
                    }
                });
                acc(*b, &mut |gb| {
                    for r in 0..sa.rows {
                        let grow = &g[r * n..(r + 1) * n];
                        for k in 0..sa.cols {
                            let a_rk = av[r * sa.cols + k];
                            if a_rk == 0.0 {
                                continue;
                            }
                            for (o, &gv) in gb[k * n..(k + 1) * n].iter_mut().zip(grow) {
                                *o += a_rk * gv;
                            }
                        }
                    }
                });
            }
            Op::Add(a, b) => {
                acc(*a, &mut |ga| add_into(ga, g));
                acc(*b, &mut |gb| add_into(gb, g));
            }
            Op::Sub(a, b) => {
                acc(*a, &mut |ga| add_into(ga, g));
                acc(*b, &mut |gb| gb.iter_mut().zip(g).for_each(|(o, &x)| *o -= x));
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                acc(*a, &mut |ga| {
                    for ((o, &x), &w) in ga.iter_mut().zip(g).zip(bv) {
                        *o += x * w;
                    }
                });
                acc(*b, &mut |gb| {
                    for ((o, &x), &w) in gb.iter_mut().zip(g).zip(av) {
                        *o += x * w;
                    }
                });
            }
            Op::Scale(a, c) => acc(*a, &mut |ga| ga.iter_mut().zip(g).for_each(|(o, &x)| *o += c * x)),
            Op::AddScalar(a) => acc(*a, &mut |ga| add_into(ga, g)),
            Op::Tanh(a) => acc(*a, &mut |ga| {
                for ((o, &x), &t) in ga.iter_mut().zip(g).zip(y) {
                    *o += x * (1.0 - t * t);
                }
            }),
            Op::Sigmoid(a) => acc(*a, &mut |ga| {
                for ((o, &x), &s) in ga.iter_mut().zip(g).zip(y) {
                    *o += x * s * (1.0 - s);
                }
            }),
            Op::Relu(a) => {
                let xv = self.value(*a);
                acc(*a, &mut |ga| {
                    for ((o, &x), &inp) in ga.iter_mut().zip(g).zip(xv) {
                        if inp > 0.0 {
                            *o += x;
                        }
                    }
                })
            }
            Op::Softmax(a) => {
                let dot: f64 = g.iter().zip(y).map(|(x, p)| x * p).sum();
                acc(*a, &mut |ga| {
                    for ((o, &x), &p) in ga.iter_mut().zip(g).zip(y) {
                        *o += p * (x - dot);
                    }
                })
            }
            Op::LogSoftmax(a) => {
                let total: f64 = g.iter().sum();
                acc(*a, &mut |ga| {
                    for ((o, &x), &lp) in ga.iter_mut().zip(g).zip(y) {
                        *o += x - libm::exp(lp) * total;
                    }
                })
            }
            Op::Concat(parts) => {
                let mut offset = 0;
                for p in parts {
                    let len = self.shape(*p).len();
                    let slice = &g[offset..offset + len];
                    acc(*p, &mut |gp| add_into(gp, slice));
                    offset += len;
                }
            }
            Op::Transpose(a) => {
                let back = transpose(g, node.shape);
                acc(*a, &mut |ga| add_into(ga, &back));
            }
            Op::Sum(a) => acc(*a, &mut |ga| ga.iter_mut().for_each(|o| *o += g[0])),
            Op::Pick(a, idx) => acc(*a, &mut |ga| ga[*idx] += g[0]),
            Op::Reduce { input, kind, arg } => {
                let s = self.shape(*input);
                acc(*input, &mut |gi| match kind {
                    Reduce::Mean => {
                        let inv = 1.0 / s.rows as f64;
                        for l in 0..s.rows {
                            for d in 0..s.cols {
                                gi[l * s.cols + d] += g[d] * inv;
                            }
                        }
                    }
                    Reduce::Max | Reduce::Min => {
                        for d in 0..s.cols {
                            gi[arg[d] * s.cols + d] += g[d];
                        }
                    }
                });
            }
        }
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    dst.iter_mut().zip(src).for_each(|(o, &x)| *o += x);
}

fn transpose(x: &[f64], s: Shape) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for r in 0..s.rows {
        for c in 0..s.cols {
            out[c * s.rows + r] = x[r * s.cols + c];
        }
    }
    out
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

pub(crate) fn log_sum_exp(x: &[f64]) -> f64 {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + libm::log(x.iter().map(|&v| libm::exp(v - m)).sum::<f64>())
}

pub(crate) fn softmax(x: &[f64]) -> Vec<f64> {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|&v| libm::exp(v - m)).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}
