//! The noise-prediction network: per-frame residual MLPs interleaved with
//! temporal attention carrying relative-position terms, an observed-frame
//! indicator channel, and padded training slots.

mod config;
mod network;
mod padding;
mod params;

pub use config::DenoiserConfig;
pub use network::{
    epsilon_theta, forward, offset_features, rpe_table, task_frame_set, temporal_attention, timestep_embedding,
    FrameSet,
};
pub use padding::{pad_batch, pad_example, slot_loss, PaddedSlot, TrainingExample};
pub use params::{check_params, init_params, param_shapes};

use fdm_autodiff::{ParamSet, Tensor};
use ndarray::{Array2, ArrayView2};

use crate::diffusion::NoisePredictor;
use crate::Result;

/// A configured network with 32-bit parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Denoiser {
    pub config: DenoiserConfig,
    pub params: ParamSet<f32>,
}

impl Denoiser {
    pub fn new(config: DenoiserConfig, params: ParamSet<f32>) -> Result<Self> {
        config.validate()?;
        check_params(&config, &params)?;
        Ok(Self { config, params })
    }

    pub fn init(config: DenoiserConfig, seed: u64) -> Result<Self> {
        let params = init_params(&config, seed)?;
        Ok(Self { config, params })
    }
}

fn to_tensor(a: ArrayView2<'_, f32>) -> Result<Tensor<f32>> {
    Ok(Tensor::matrix(a.nrows(), a.ncols(), a.iter().copied().collect())?)
}

impl NoisePredictor for Denoiser {
    fn frame_dim(&self) -> usize {
        self.config.frame_dim
    }

    fn max_frames(&self) -> usize {
        self.config.k
    }

    fn predict(
        &self,
        x_t: ArrayView2<'_, f32>,
        y: ArrayView2<'_, f32>,
        t: usize,
        latent: &[usize],
        observed: &[usize],
    ) -> Result<Array2<f32>> {
        let out = epsilon_theta(
            &self.config,
            &self.params,
            &to_tensor(x_t)?,
            &to_tensor(y)?,
            t,
            latent,
            observed,
        )?;
        let (r, c) = (latent.len(), self.config.frame_dim);
        Array2::from_shape_vec((r, c), out.into_data()).map_err(|e| crate::Error::Shape(e.to_string()))
    }
}
