//! A trained model on disk: FDMP parameters (optionally with optimizer
//! state) next to a key-value file holding the network shape, the noise
//! schedule and the data scaler.

use std::fs;
use std::path::Path;

use crate::denoiser::{Denoiser, DenoiserConfig};
use crate::diffusion::NoiseSchedule;
use crate::io::{decode_checkpoint, encode_checkpoint, KeyValues};
use crate::training::{pack_checkpoint, unpack_checkpoint, Adam, Scaler};
use crate::Result;

pub const PARAMS_FILE: &str = "model.fdmp";
pub const CONFIG_FILE: &str = "model.kv";

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub denoiser: Denoiser,
    pub scaler: Scaler,
    pub beta_start: f64,
    pub beta_end: f64,
}

impl Model {
    pub fn schedule(&self) -> Result<NoiseSchedule> {
        NoiseSchedule::linear(self.denoiser.config.steps, self.beta_start, self.beta_end)
    }

    pub fn config_kv(&self) -> KeyValues {
        let mut kv = self.denoiser.config.to_kv();
        kv.set("schedule.beta_start", self.beta_start);
        kv.set("schedule.beta_end", self.beta_end);
        self.scaler.write_kv(&mut kv);
        kv
    }

    /// Writes both files into `dir`, including optimizer state when given.
    pub fn save(&self, dir: &Path, adam: Option<&Adam>) -> Result<()> {
        fs::create_dir_all(dir)?;
        let params = match adam {
            Some(a) => pack_checkpoint(&self.denoiser.params, a)?,
            None => self.denoiser.params.clone(),
        };
        fs::write(dir.join(PARAMS_FILE), encode_checkpoint(&params)?)?;
        fs::write(dir.join(CONFIG_FILE), self.config_kv().to_text())?;
        Ok(())
    }

    /// Loads a model and any stored optimizer state (with learning rate
    /// `lr` attached).
    pub fn load(dir: &Path, lr: f32) -> Result<(Self, Option<Adam>)> {
        let kv = KeyValues::parse(&fs::read_to_string(dir.join(CONFIG_FILE))?)?;
        let config = DenoiserConfig::from_kv(&kv)?;
        let scaler = Scaler::from_kv(&kv, config.frame_dim)?;
        let beta_start = kv.require("schedule.beta_start")?;
        let beta_end = kv.require("schedule.beta_end")?;
        NoiseSchedule::linear(config.steps, beta_start, beta_end)?;
        let all = decode_checkpoint(&fs::read(dir.join(PARAMS_FILE))?)?;
        let (params, adam) = unpack_checkpoint(all, lr)?;
        let denoiser = Denoiser::new(config, params)?;
        Ok((
            Self {
                denoiser,
                scaler,
                beta_start,
                beta_end,
            },
            adam,
        ))
    }
}
