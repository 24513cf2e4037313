//! Dense tensors with tape-based reverse-mode differentiation.
//!
//! The op set is deliberately small: what a frame-sequence denoiser with
//! temporal attention needs, and nothing else. Everything is generic over
//! [`Real`] so the same model code runs in `f32` for training and in `f64`
//! for finite-difference verification.

mod check;
mod error;
mod graph;
mod params;
mod tensor;

pub use check::{evaluate, grad, grad_check};
pub use error::{Error, Result};
pub use graph::{Gradients, Graph, Var};
pub use params::{ParamSet, ParamVars};
pub use tensor::{Real, Tensor};
