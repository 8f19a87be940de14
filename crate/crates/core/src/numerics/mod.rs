//! Dense reverse-mode automatic differentiation and the optimizers built on it.

mod dense;
mod gru;
mod optim;
mod tape;
mod tensor;

pub use dense::Dense;
pub use gru::{gru_cell, GruParams};
pub use optim::{l2_penalty, Adam, AdamConfig};
pub use tape::{BackwardReport, Gradients, Reduce, Tape, Var};
pub use tensor::{Shape, Tensor};
