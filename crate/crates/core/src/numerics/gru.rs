use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use super::tape::{Tape, Var};
use super::tensor::{Shape, Tensor};
use crate::Result;

/// Parameters of one GRU cell, generic over the leaf type so the same layout
/// holds tensors, tape handles, gradients and optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct GruParams<T = Tensor> {
    pub w_z: T,
    pub w_r: T,
    pub w_h: T,
    pub u_z: T,
    pub u_r: T,
    pub u_h: T,
    pub b_z: T,
    pub b_r: T,
    pub b_h: T,
}

impl GruParams<Tensor> {
    /// Weights uniform in `(-1/sqrt(hidden), 1/sqrt(hidden))`, biases zero.
    pub fn init<R: Rng + ?Sized>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let k = 1.0 / libm::sqrt(hidden as f64);
        let mut w = || Tensor::uniform(Shape::new(hidden, input), k, rng);
        let (w_z, w_r, w_h) = (w(), w(), w());
        let mut u = || Tensor::uniform(Shape::new(hidden, hidden), k, rng);
        let (u_z, u_r, u_h) = (u(), u(), u());
        let b = || Tensor::zeros(Shape::col(hidden));
        Self {
            w_z,
            w_r,
            w_h,
            u_z,
            u_r,
            u_h,
            b_z: b(),
            b_r: b(),
            b_h: b(),
        }
    }

    pub fn zeros(input: usize, hidden: usize) -> Self {
        let w = || Tensor::zeros(Shape::new(hidden, input));
        let u = || Tensor::zeros(Shape::new(hidden, hidden));
        let b = || Tensor::zeros(Shape::col(hidden));
        Self {
            w_z: w(),
            w_r: w(),
            w_h: w(),
            u_z: u(),
            u_r: u(),
            u_h: u(),
            b_z: b(),
            b_r: b(),
            b_h: b(),
        }
    }

    pub fn input_size(&self) -> usize {
        self.w_z.shape().cols
    }

    pub fn hidden_size(&self) -> usize {
        self.w_z.shape().rows
    }
}

impl<T> GruParams<T> {
    pub fn map<'a, U>(&'a self, f: &mut impl FnMut(&'a T) -> U) -> GruParams<U> {
        GruParams {
            w_z: f(&self.w_z),
            w_r: f(&self.w_r),
            w_h: f(&self.w_h),
            u_z: f(&self.u_z),
            u_r: f(&self.u_r),
            u_h: f(&self.u_h),
            b_z: f(&self.b_z),
            b_r: f(&self.b_r),
            b_h: f(&self.b_h),
        }
    }

    pub fn visit<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a T)>) {
        let fields = [
            ("w_z", &self.w_z),
            ("w_r", &self.w_r),
            ("w_h", &self.w_h),
            ("u_z", &self.u_z),
            ("u_r", &self.u_r),
            ("u_h", &self.u_h),
            ("b_z", &self.b_z),
            ("b_r", &self.b_r),
            ("b_h", &self.b_h),
        ];
        out.extend(fields.into_iter().map(|(n, t)| (format!("{prefix}.{n}"), t)));
    }

    pub fn visit_mut<'a>(&'a mut self, out: &mut Vec<&'a mut T>) {
        out.extend([
            &mut self.w_z,
            &mut self.w_r,
            &mut self.w_h,
            &mut self.u_z,
            &mut self.u_r,
            &mut self.u_h,
            &mut self.b_z,
            &mut self.b_r,
            &mut self.b_h,
        ]);
    }
}

/// One GRU step:
///
/// ```text
/// z  = sigmoid(W_z x + U_z h + b_z)
/// r  = sigmoid(W_r x + U_r h + b_r)
/// h~ = tanh(W_h x + U_h (r * h) + b_h)
/// h' = (1 - z) * h + z * h~
/// ```
pub fn gru_cell(tape: &mut Tape<'_>, x: Var, h_prev: Var, p: &GruParams<Var>) -> Result<Var> {
    let gate = |tape: &mut Tape<'_>, w: Var, u: Var, b: Var, h: Var| -> Result<Var> {
        let wx = tape.matmul(w, x)?;
        let uh = tape.matmul(u, h)?;
        let s = tape.add(wx, uh)?;
        tape.add(s, b)
    };
    let z_pre = gate(tape, p.w_z, p.u_z, p.b_z, h_prev)?;
    let z = tape.sigmoid(z_pre);
    let r_pre = gate(tape, p.w_r, p.u_r, p.b_r, h_prev)?;
    let r = tape.sigmoid(r_pre);
    let rh = tape.mul(r, h_prev)?;
    let cand_pre = gate(tape, p.w_h, p.u_h, p.b_h, rh)?;
    let cand = tape.tanh(cand_pre);
    let keep = tape.one_minus(z);
    let old = tape.mul(keep, h_prev)?;
    let new = tape.mul(z, cand)?;
    tape.add(old, new)
}
