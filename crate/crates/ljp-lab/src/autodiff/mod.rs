//! Minimal dense-tensor arithmetic with reverse-mode differentiation and a
//! finite-difference gradient checker.

mod check;
mod optim;
mod params;
mod tape;
mod tensor;

pub use check::{finite_diff_check, ScalarFn};
pub use optim::Adam;
pub use params::{BoundParams, ParamId, ParamSet};
pub use tape::{Gradients, Tape, Var};
pub use tensor::{Result, Tensor, TensorError};
