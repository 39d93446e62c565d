//! Minimal reverse-mode automatic differentiation and the Adam optimizer.

mod adam;
mod tape;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use tape::{Gradients, Tape, Var, NORMALIZE_EPS};
pub use tensor::Tensor;
