use ndarray::{Array2, Axis};
use rand::Rng;

use super::{adaptive_select, forced_context, SamplingScheme, Stage};
use crate::diffusion::{ddpm_sample, NoisePredictor, NoiseSchedule};
use crate::{Error, Result};

/// Called after each stage with the stage actually executed (its context
/// may differ from the scheme's when chosen adaptively).
pub trait StageObserver {
    fn stage_done(&mut self, index: usize, stage: &Stage);
}

impl StageObserver for () {
    fn stage_done(&mut self, _: usize, _: &Stage) {}
}

impl StageObserver for Vec<Stage> {
    fn stage_done(&mut self, _: usize, stage: &Stage) {
        self.push(stage.clone());
    }
}

/// Completes `video` under `scheme`: for each stage, gathers the observed
/// frames, samples the latent ones and writes them back. Frames outside
/// the prefix are never read before they are written.
pub fn sample_video<P: NoisePredictor + ?Sized, R: Rng + ?Sized>(
    model: &P,
    schedule: &NoiseSchedule,
    video: &Array2<f32>,
    scheme: &SamplingScheme,
    adaptive: bool,
    rng: &mut R,
) -> Result<Array2<f32>> {
    sample_video_with(model, schedule, video, scheme, adaptive, rng, &mut ())
}

/// [`sample_video`] reporting each executed stage to `observer`. With
/// `adaptive`, each stage's context is re-chosen from the current frame
/// values by [`adaptive_select`] with budget `K - |X_s|`.
#[allow(clippy::too_many_arguments)]
pub fn sample_video_with<P: NoisePredictor + ?Sized, R: Rng + ?Sized, O: StageObserver + ?Sized>(
    model: &P,
    schedule: &NoiseSchedule,
    video: &Array2<f32>,
    scheme: &SamplingScheme,
    adaptive: bool,
    rng: &mut R,
    observer: &mut O,
) -> Result<Array2<f32>> {
    scheme.check()?;
    if scheme.k > model.max_frames() {
        return Err(Error::invalid(format!(
            "scheme uses K={} but the model handles at most {}",
            scheme.k,
            model.max_frames()
        )));
    }
    if video.dim() != (scheme.n, model.frame_dim()) {
        return Err(Error::Shape(format!(
            "video {:?} for a scheme over {} frames of dim {}",
            video.dim(),
            scheme.n,
            model.frame_dim()
        )));
    }
    let mut v = video.clone();
    let mut available: Vec<usize> = (0..scheme.n_obs).collect();
    for (s, stage) in scheme.stages.iter().enumerate() {
        let observed = if adaptive {
            let budget = scheme.k - stage.latent.len();
            let forced = forced_context(&available, &stage.latent, budget);
            adaptive_select(&available, v.view(), &stage.latent, budget, &forced)?
        } else {
            stage.observed.clone()
        };
        let y = v.select(Axis(0), &observed);
        let x = ddpm_sample(model, schedule, y.view(), &stage.latent, &observed, rng)?;
        for (r, &i) in stage.latent.iter().enumerate() {
            v.row_mut(i).assign(&x.row(r));
        }
        available.extend(&stage.latent);
        available.sort_unstable();
        observer.stage_done(s, &Stage::new(stage.latent.clone(), observed));
    }
    Ok(v)
}
