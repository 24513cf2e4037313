//! Flexible conditional diffusion over frame sequences.
//!
//! A video is an `N x frame_dim` matrix. The model samples any subset of
//! frames conditioned on any other subset; sampling schemes chain such
//! calls to complete long videos under a fixed joint frame budget `K`.

pub mod denoiser;
pub mod diffusion;
mod error;
pub mod evalbench;
pub mod io;
pub mod model;
pub mod optimize;
pub mod rng;
pub mod schemes;
pub mod taskdist;
pub mod training;

pub use error::{Error, Result};
