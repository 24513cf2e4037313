use crate::io::KeyValues;
use crate::{Error, Result};

/// Shape hyperparameters of the denoising network.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiserConfig {
    pub frame_dim: usize,
    pub channels: usize,
    /// Width of the hidden layer in each per-frame MLP.
    pub hidden: usize,
    pub blocks: usize,
    pub heads: usize,
    /// Maximum number of frames represented jointly.
    pub k: usize,
    /// Diffusion steps.
    pub steps: usize,
    /// Positions must lie in `0..n_max`.
    pub n_max: usize,
}

impl DenoiserConfig {
    pub fn new(
        frame_dim: usize,
        channels: usize,
        blocks: usize,
        heads: usize,
        k: usize,
        steps: usize,
        n_max: usize,
    ) -> Result<Self> {
        let cfg = Self {
            frame_dim,
            channels,
            hidden: 2 * channels,
            blocks,
            heads,
            k,
            steps,
            n_max,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::invalid(format!("denoiser config: {m}")));
        if self.frame_dim == 0 || self.channels == 0 || self.hidden == 0 {
            return fail("dimensions must be positive");
        }
        if self.heads == 0 || !self.channels.is_multiple_of(self.heads) {
            return fail("channels must be divisible by heads");
        }
        if self.k < 2 {
            return fail("k must be at least 2");
        }
        if self.blocks == 0 {
            return fail("at least one block is required");
        }
        if self.steps == 0 || self.n_max == 0 {
            return fail("steps and n_max must be positive");
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.channels / self.heads
    }

    pub fn to_kv(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.set("model.frame_dim", self.frame_dim);
        kv.set("model.channels", self.channels);
        kv.set("model.hidden", self.hidden);
        kv.set("model.blocks", self.blocks);
        kv.set("model.heads", self.heads);
        kv.set("model.k", self.k);
        kv.set("model.steps", self.steps);
        kv.set("model.n_max", self.n_max);
        kv
    }

    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let cfg = Self {
            frame_dim: kv.require("model.frame_dim")?,
            channels: kv.require("model.channels")?,
            hidden: kv.require("model.hidden")?,
            blocks: kv.require("model.blocks")?,
            heads: kv.require("model.heads")?,
            k: kv.require("model.k")?,
            steps: kv.require("model.steps")?,
            n_max: kv.require("model.n_max")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
