//! Greedy choice of each stage's observed frames for fixed latent frames,
//! minimizing an estimate of the denoising loss.

use ndarray::{Array2, Axis};
use rayon::prelude::*;

use crate::diffusion::{check_task, denoising_loss, NoisePredictor, NoiseSchedule};
use crate::rng::{keyed, standard_normal};
use crate::schemes::{forced_context, SamplingScheme, Stage};
use crate::{Error, Result};

const STREAM_OPT: u64 = 0x6f70;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub t_grid: Vec<usize>,
    pub videos_per_eval: usize,
    /// Observed frames per stage.
    pub target_obs_count: usize,
    pub seed: u64,
}

impl OptimizerConfig {
    /// Ten evenly spaced timesteps and ten evaluation videos.
    pub fn new(schedule: &NoiseSchedule, target_obs_count: usize, seed: u64) -> Self {
        Self {
            t_grid: schedule.even_grid(10),
            videos_per_eval: 10,
            target_obs_count,
            seed,
        }
    }

    pub fn validate(&self, schedule: &NoiseSchedule) -> Result<()> {
        if self.t_grid.is_empty() {
            return Err(Error::invalid("t_grid is empty"));
        }
        for &t in &self.t_grid {
            schedule.check(t)?;
        }
        if self.videos_per_eval == 0 {
            return Err(Error::invalid("videos_per_eval must be at least 1"));
        }
        Ok(())
    }
}

/// Score of a candidate context for one stage. `stage` and `step` key the
/// random numbers so that every candidate within a greedy step is scored
/// under identical noise.
pub trait StageLoss: Sync {
    fn stage_loss(&self, latent: &[usize], observed: &[usize], stage: usize, step: usize) -> Result<f64>;
}

/// The noise used for video `video` at timestep `t` under `key = (stage, step)`.
pub fn stage_noise(seed: u64, key: (usize, usize), video: usize, t: usize, rows: usize, dim: usize) -> Array2<f32> {
    let mut rng = keyed(seed, &[STREAM_OPT, key.0 as u64, key.1 as u64, video as u64, t as u64]);
    standard_normal(&mut rng, rows, dim)
}

/// Mean denoising loss over `t_grid` and `videos`, with the noise for each
/// `(video, t)` drawn from a stream keyed by `(seed, stage, step, video, t)`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_stage_loss<P: NoisePredictor + ?Sized>(
    model: &P,
    schedule: &NoiseSchedule,
    latent: &[usize],
    observed: &[usize],
    videos: &[Array2<f32>],
    t_grid: &[usize],
    seed: u64,
    key: (usize, usize),
) -> Result<f64> {
    check_task(latent, observed, model.max_frames())?;
    if videos.is_empty() || t_grid.is_empty() {
        return Err(Error::invalid("need at least one video and one timestep"));
    }
    let mut total = 0.0;
    for (v, video) in videos.iter().enumerate() {
        if let Some(&i) = latent.iter().chain(observed).find(|&&i| i >= video.nrows()) {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: video.nrows(),
            });
        }
        let x0 = video.select(Axis(0), latent);
        let y = video.select(Axis(0), observed);
        for &t in t_grid {
            let eps = stage_noise(seed, key, v, t, latent.len(), model.frame_dim());
            total += denoising_loss(model, schedule, x0.view(), y.view(), latent, observed, t, eps.view())?;
        }
    }
    Ok(total / (videos.len() * t_grid.len()) as f64)
}

/// [`estimate_stage_loss`] bound to a model and evaluation set.
pub struct DiffusionStageLoss<'a, P: ?Sized> {
    pub model: &'a P,
    pub schedule: &'a NoiseSchedule,
    pub videos: &'a [Array2<f32>],
    pub t_grid: &'a [usize],
    pub seed: u64,
}

impl<P: NoisePredictor + ?Sized> StageLoss for DiffusionStageLoss<'_, P> {
    fn stage_loss(&self, latent: &[usize], observed: &[usize], stage: usize, step: usize) -> Result<f64> {
        estimate_stage_loss(
            self.model,
            self.schedule,
            latent,
            observed,
            self.videos,
            self.t_grid,
            self.seed,
            (stage, step),
        )
    }
}

/// One candidate evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub stage: usize,
    pub step: usize,
    pub candidate: usize,
    pub loss: f64,
    pub chosen: bool,
}

pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from("stage,step,candidate,loss,chosen\n");
    for r in trace {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.stage, r.step, r.candidate, r.loss, r.chosen as u8
        ));
    }
    out
}

/// For each stage in order, starts from the neighbours just before and
/// after its latent frames, then repeatedly adds the available frame whose
/// inclusion gives the lowest loss (ties to the smaller index) until the
/// stage has `target` observed frames. Only frames given in the prefix or
/// sampled by an earlier stage are candidates.
pub fn optimize_observed<L: StageLoss + ?Sized>(
    loss: &L,
    n: usize,
    n_obs: usize,
    k: usize,
    latent_stages: &[Vec<usize>],
    target: usize,
) -> Result<(SamplingScheme, Vec<TraceRow>)> {
    let skeleton = SamplingScheme {
        n,
        k,
        n_obs,
        stages: latent_stages.iter().map(|x| Stage::new(x.clone(), vec![])).collect(),
    };
    skeleton.check()?;
    let mut available: Vec<usize> = (0..n_obs).collect();
    let mut stages = Vec::with_capacity(latent_stages.len());
    let mut trace = Vec::new();
    for (s, latent) in latent_stages.iter().enumerate() {
        if latent.len() + target > k {
            return Err(Error::OverBudget {
                frames: latent.len() + target,
                k,
            });
        }
        let mut observed = forced_context(&available, latent, target);
        let mut step = 0;
        while observed.len() < target {
            let candidates: Vec<usize> = available.iter().copied().filter(|i| !observed.contains(i)).collect();
            if candidates.is_empty() {
                return Err(Error::invalid(format!(
                    "stage {s}: only {} eligible context frames, wanted {target}",
                    observed.len()
                )));
            }
            let scores = candidates
                .par_iter()
                .map(|&c| {
                    let mut y = observed.clone();
                    y.push(c);
                    y.sort_unstable();
                    loss.stage_loss(latent, &y, s, step)
                })
                .collect::<Result<Vec<f64>>>()?;
            let mut best = 0;
            for (i, &l) in scores.iter().enumerate() {
                if l.is_nan() {
                    return Err(Error::NonFiniteLoss { step });
                }
                if l < scores[best] {
                    best = i;
                }
            }
            for (i, (&c, &l)) in candidates.iter().zip(&scores).enumerate() {
                trace.push(TraceRow {
                    stage: s,
                    step,
                    candidate: c,
                    loss: l,
                    chosen: i == best,
                });
            }
            observed.push(candidates[best]);
            observed.sort_unstable();
            step += 1;
        }
        available.extend(latent);
        available.sort_unstable();
        stages.push(Stage::new(latent.clone(), observed));
    }
    let scheme = SamplingScheme { n, k, n_obs, stages };
    scheme.check()?;
    Ok((scheme, trace))
}
