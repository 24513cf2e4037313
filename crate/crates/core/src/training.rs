//! Stochastic-gradient training of the denoiser on videos.

use fdm_autodiff::{grad, ParamSet, Tensor};
use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;

use crate::denoiser::{pad_example, slot_loss, Denoiser, PaddedSlot, TrainingExample};
use crate::diffusion::NoiseSchedule;
use crate::io::KeyValues;
use crate::rng::{keyed, standard_normal};
use crate::taskdist::TaskDistribution;
use crate::{Error, Result};

const STREAM_TRAIN: u64 = 0x7261;
const STREAM_VALID: u64 = 0x7661;

/// Per-channel affine normalization fitted on training videos.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub mean: Vec<f32>,
    pub std: Vec<f32>,
}

impl Scaler {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    /// Channel mean and standard deviation over every frame; channels with
    /// (near) zero spread keep unit scale.
    pub fn fit(videos: &[Array2<f32>]) -> Result<Self> {
        let dim = videos
            .first()
            .map(|v| v.ncols())
            .ok_or_else(|| Error::invalid("no videos to fit"))?;
        let mut sum = vec![0.0f64; dim];
        let mut sq = vec![0.0f64; dim];
        let mut count = 0usize;
        for v in videos {
            for row in v.rows() {
                for (c, &x) in row.iter().enumerate() {
                    sum[c] += x as f64;
                    sq[c] += (x as f64) * (x as f64);
                }
                count += 1;
            }
        }
        let n = count.max(1) as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let std = sq
            .iter()
            .zip(&mean)
            .map(|(s, m)| {
                let var = (s / n - m * m).max(0.0);
                if var.sqrt() < 1e-6 {
                    1.0
                } else {
                    var.sqrt() as f32
                }
            })
            .collect();
        Ok(Self {
            mean: mean.iter().map(|&m| m as f32).collect(),
            std,
        })
    }

    pub fn normalize(&self, video: &Array2<f32>) -> Array2<f32> {
        let mut out = video.clone();
        for mut row in out.rows_mut() {
            for (c, x) in row.iter_mut().enumerate() {
                *x = (*x - self.mean[c]) / self.std[c];
            }
        }
        out
    }

    pub fn denormalize(&self, video: &Array2<f32>) -> Array2<f32> {
        let mut out = video.clone();
        for mut row in out.rows_mut() {
            for (c, x) in row.iter_mut().enumerate() {
                *x = *x * self.std[c] + self.mean[c];
            }
        }
        out
    }

    pub fn write_kv(&self, kv: &mut KeyValues) {
        let join = |v: &[f32]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        kv.set("scaler.mean", join(&self.mean));
        kv.set("scaler.std", join(&self.std));
    }

    pub fn from_kv(kv: &KeyValues, dim: usize) -> Result<Self> {
        let parse = |key: &str| -> Result<Vec<f32>> {
            let raw: String = kv.require(key)?;
            let vals = raw
                .split(',')
                .map(|s| s.trim().parse::<f32>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::format("key-value file", format!("bad list for {key}")))?;
            if vals.len() != dim || vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::format(
                    "key-value file",
                    format!("{key} needs {dim} finite values"),
                ));
            }
            Ok(vals)
        };
        let std = parse("scaler.std")?;
        if std.iter().any(|&s| s <= 0.0) {
            return Err(Error::format("key-value file", "scaler.std must be positive"));
        }
        Ok(Self {
            mean: parse("scaler.mean")?,
            std,
        })
    }
}

/// Adaptive-moment optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
    pub m: ParamSet<f32>,
    pub v: ParamSet<f32>,
    /// Updates applied so far.
    pub step: usize,
}

impl Adam {
    pub fn new(params: &ParamSet<f32>, lr: f32) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: params.zeros_like(),
            v: params.zeros_like(),
            step: 0,
        }
    }

    pub fn update(&mut self, params: &mut ParamSet<f32>, grads: &ParamSet<f32>) -> Result<()> {
        if !params.same_layout(grads) || !params.same_layout(&self.m) {
            return Err(Error::invalid("gradient layout does not match parameters"));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        for (name, p) in params.iter_mut() {
            let g = grads.get(name)?;
            let m = self.m.get_mut(name)?;
            for (mi, &gi) in m.data_mut().iter_mut().zip(g.data()) {
                *mi = b1 * *mi + (1.0 - b1) * gi;
            }
            let v = self.v.get_mut(name)?;
            for (vi, &gi) in v.data_mut().iter_mut().zip(g.data()) {
                *vi = b2 * *vi + (1.0 - b2) * gi * gi;
            }
            let (m, v) = (self.m.get(name)?, self.v.get(name)?);
            for ((pi, &mi), &vi) in p.data_mut().iter_mut().zip(m.data()).zip(v.data()) {
                *pi -= lr * (mi / c1) / ((vi / c2).sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// Parameters plus optimizer state as one flat set for a checkpoint:
/// moments under `adam.m.` / `adam.v.` and the update count as `adam.step`.
pub fn pack_checkpoint(params: &ParamSet<f32>, adam: &Adam) -> Result<ParamSet<f32>> {
    let mut out = params.clone();
    for (name, t) in adam.m.iter() {
        out.insert(format!("adam.m.{name}"), t.clone())?;
    }
    for (name, t) in adam.v.iter() {
        out.insert(format!("adam.v.{name}"), t.clone())?;
    }
    out.insert("adam.step", Tensor::vector(vec![adam.step as f32]))?;
    Ok(out)
}

/// Splits a checkpoint into parameters and, when present, optimizer state.
pub fn unpack_checkpoint(all: ParamSet<f32>, lr: f32) -> Result<(ParamSet<f32>, Option<Adam>)> {
    let mut params = ParamSet::new();
    let mut m = ParamSet::new();
    let mut v = ParamSet::new();
    let mut step = None;
    for (name, t) in all.iter() {
        if let Some(rest) = name.strip_prefix("adam.m.") {
            m.insert(rest, t.clone())?;
        } else if let Some(rest) = name.strip_prefix("adam.v.") {
            v.insert(rest, t.clone())?;
        } else if name == "adam.step" {
            step = t.data().first().map(|&s| s as usize);
        } else {
            params.insert(name, t.clone())?;
        }
    }
    let adam = match step {
        None => None,
        Some(step) => {
            if !params.same_layout(&m) || !params.same_layout(&v) {
                return Err(Error::format(
                    "FDMP checkpoint",
                    "optimizer state does not match parameters",
                ));
            }
            let mut adam = Adam::new(&params, lr);
            adam.m = m;
            adam.v = v;
            adam.step = step;
            Some(adam)
        }
    };
    Ok((params, adam))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Total number of updates; training resumes from `Adam::step`.
    pub steps: usize,
    pub batch: usize,
    pub seed: u64,
    pub taskdist: TaskDistribution,
    /// Fill every slot to `K` frames with frames from another video.
    pub pad: bool,
}

/// The padded slot for batch element `element` of update `step`, drawn
/// from its own random stream.
pub fn training_slot(
    model: &Denoiser,
    videos: &[Array2<f32>],
    taskdist: TaskDistribution,
    pad: bool,
    seed: u64,
    key: &[u64],
) -> Result<PaddedSlot> {
    let cfg = &model.config;
    let mut rng = keyed(seed, key);
    let vi = rng.gen_range(0..videos.len());
    let video = &videos[vi];
    let task = taskdist.sample(video.nrows(), cfg.k, &mut rng)?;
    let t = rng.gen_range(1..=cfg.steps);
    let eps = standard_normal(&mut rng, task.latent.len(), cfg.frame_dim);
    let example = TrainingExample::from_video(video, &task.latent, &task.observed, t, eps)?;
    if pad {
        pad_example(example, videos, Some(vi), cfg.k, cfg.steps, &mut rng)
    } else {
        Ok(PaddedSlot::single(example))
    }
}

/// Mean over slots of `slot_loss / (K * frame_dim)` and its gradient.
pub fn batch_gradient(
    model: &Denoiser,
    schedule: &NoiseSchedule,
    slots: &[PaddedSlot],
) -> Result<(f64, ParamSet<f32>)> {
    let cfg = &model.config;
    let scale = 1.0 / (cfg.k * cfg.frame_dim) as f32;
    let results: Vec<Result<(f32, ParamSet<f32>)>> = slots
        .par_iter()
        .map(|slot| {
            grad(&model.params, |g, v| {
                let l = slot_loss(g, v, cfg, schedule, slot).map_err(|e| match e {
                    Error::Autodiff(a) => a,
                    other => fdm_autodiff::Error::NonFinite {
                        context: other.to_string(),
                        index: 0,
                    },
                })?;
                g.scale(l, scale)
            })
            .map_err(Error::from)
        })
        .collect();
    let mut total = 0.0f64;
    let mut sum = model.params.zeros_like();
    let inv = 1.0 / slots.len().max(1) as f32;
    for r in results {
        let (loss, grads) = r?;
        total += loss as f64;
        for (name, acc) in sum.iter_mut() {
            let g = grads.get(name)?;
            for (a, &b) in acc.data_mut().iter_mut().zip(g.data()) {
                *a += b * inv;
            }
        }
    }
    Ok((total / slots.len().max(1) as f64, sum))
}

/// Runs updates `adam.step + 1 ..= cfg.steps`. Each update draws `batch`
/// slots from streams keyed by `(seed, step, element)`, so a resumed run
/// reproduces an uninterrupted one. `on_step` sees every `(step, loss)`.
pub fn train(
    model: &mut Denoiser,
    adam: &mut Adam,
    schedule: &NoiseSchedule,
    videos: &[Array2<f32>],
    cfg: &TrainConfig,
    mut on_step: impl FnMut(usize, f64),
) -> Result<()> {
    if videos.is_empty() {
        return Err(Error::invalid("training needs at least one video"));
    }
    if cfg.batch == 0 {
        return Err(Error::invalid("batch must be at least 1"));
    }
    if schedule.steps() != model.config.steps {
        return Err(Error::invalid("schedule length differs from the model's step count"));
    }
    while adam.step < cfg.steps {
        let step = adam.step + 1;
        let slots = (0..cfg.batch)
            .map(|e| {
                training_slot(
                    model,
                    videos,
                    cfg.taskdist,
                    cfg.pad,
                    cfg.seed,
                    &[STREAM_TRAIN, step as u64, e as u64],
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let (loss, grads) = match batch_gradient(model, schedule, &slots) {
            Ok(r) => r,
            Err(Error::Autodiff(fdm_autodiff::Error::NonFinite { .. })) => return Err(Error::NonFiniteLoss { step }),
            Err(e) => return Err(e),
        };
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { step });
        }
        adam.update(&mut model.params, &grads)?;
        if !model.params.is_finite() {
            return Err(Error::NonFiniteLoss { step });
        }
        on_step(step, loss);
    }
    Ok(())
}

/// Mean scaled loss over a fixed set of `count` slots (seeded independently
/// of training draws), for before/after comparisons.
pub fn validation_loss(
    model: &Denoiser,
    schedule: &NoiseSchedule,
    videos: &[Array2<f32>],
    taskdist: TaskDistribution,
    seed: u64,
    count: usize,
) -> Result<f64> {
    let slots = (0..count)
        .map(|e| training_slot(model, videos, taskdist, false, seed, &[STREAM_VALID, e as u64]))
        .collect::<Result<Vec<_>>>()?;
    let cfg = &model.config;
    let scale = 1.0 / (cfg.k * cfg.frame_dim) as f64;
    let losses: Vec<Result<f64>> = slots
        .par_iter()
        .map(|slot| {
            let g = fdm_autodiff::Graph::new();
            let v = model.params.bind(&g)?;
            let l = slot_loss(&g, &v, cfg, schedule, slot)?;
            let value = g.value(l).data()[0] as f64;
            Ok(value * scale)
        })
        .collect();
    let mut total = 0.0;
    for l in losses {
        total += l?;
    }
    Ok(total / count.max(1) as f64)
}

/// `step,loss` lines with a header.
pub fn loss_csv(log: &[(usize, f64)]) -> String {
    let mut out = String::from("step,loss\n");
    for (s, l) in log {
        out.push_str(&format!("{s},{l}\n"));
    }
    out
}
