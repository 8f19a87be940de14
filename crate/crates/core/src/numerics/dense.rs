use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use super::tape::{Tape, Var};
use super::tensor::{Shape, Tensor};
use crate::Result;

/// Affine layer `w x + b` with `w: out x in`, `b: out x 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T = Tensor> {
    pub w: T,
    pub b: T,
}

impl Dense<Tensor> {
    pub fn init<R: Rng + ?Sized>(input: usize, output: usize, rng: &mut R) -> Self {
        let k = 1.0 / libm::sqrt(input as f64);
        Self {
            w: Tensor::uniform(Shape::new(output, input), k, rng),
            b: Tensor::zeros(Shape::col(output)),
        }
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            w: Tensor::zeros(Shape::new(output, input)),
            b: Tensor::zeros(Shape::col(output)),
        }
    }

    pub fn input_size(&self) -> usize {
        self.w.shape().cols
    }

    pub fn output_size(&self) -> usize {
        self.w.shape().rows
    }
}

impl<T> Dense<T> {
    pub fn map<'a, U>(&'a self, f: &mut impl FnMut(&'a T) -> U) -> Dense<U> {
        Dense {
            w: f(&self.w),
            b: f(&self.b),
        }
    }

    pub fn visit<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a T)>) {
        out.push((format!("{prefix}.w"), &self.w));
        out.push((format!("{prefix}.b"), &self.b));
    }

    pub fn visit_mut<'a>(&'a mut self, out: &mut Vec<&'a mut T>) {
        out.push(&mut self.w);
        out.push(&mut self.b);
    }
}

impl Dense<Var> {
    pub fn forward(&self, tape: &mut Tape<'_>, x: Var) -> Result<Var> {
        let wx = tape.matmul(self.w, x)?;
        tape.add(wx, self.b)
    }
}
