use ndarray::{Array2, ArrayView2};
use rand::Rng;

use super::NoiseSchedule;
use crate::rng::standard_normal;
use crate::{Error, Result};

/// Anything that predicts the noise in a set of noisy latent frames given
/// clean observed frames and the positions of both within the video.
pub trait NoisePredictor: Sync {
    fn frame_dim(&self) -> usize;

    /// Largest `|latent| + |observed|` the predictor accepts.
    fn max_frames(&self) -> usize;

    /// Returns a `(latent.len(), frame_dim)` noise estimate for `x_t`.
    fn predict(
        &self,
        x_t: ArrayView2<'_, f32>,
        y: ArrayView2<'_, f32>,
        t: usize,
        latent: &[usize],
        observed: &[usize],
    ) -> Result<Array2<f32>>;
}

/// Checks the structural preconditions shared by every conditional call:
/// non-empty latent set, no duplicates, no overlap, joint size within `k`.
pub fn check_task(latent: &[usize], observed: &[usize], k: usize) -> Result<()> {
    if latent.is_empty() {
        return Err(Error::EmptyLatent);
    }
    let total = latent.len() + observed.len();
    if total > k {
        return Err(Error::OverBudget { frames: total, k });
    }
    let mut all: Vec<usize> = latent.iter().chain(observed).copied().collect();
    all.sort_unstable();
    if let Some(w) = all.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Overlap(w[0]));
    }
    Ok(())
}

fn check_shape(a: &ArrayView2<'_, f32>, b: &ArrayView2<'_, f32>, what: &str) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::Shape(format!("{what}: {:?} vs {:?}", a.dim(), b.dim())));
    }
    Ok(())
}

/// One noising step with explicit noise: `sqrt(a_t) x + sqrt(1 - a_t) eps`.
pub fn forward_step_with_noise(
    schedule: &NoiseSchedule,
    x_prev: ArrayView2<'_, f32>,
    t: usize,
    eps: ArrayView2<'_, f32>,
) -> Result<Array2<f32>> {
    schedule.check(t)?;
    check_shape(&x_prev, &eps, "forward_step")?;
    let a = schedule.alpha(t);
    let (ca, cn) = (a.sqrt() as f32, (1.0 - a).sqrt() as f32);
    Ok(&x_prev * ca + &eps * cn)
}

pub fn forward_step<R: Rng + ?Sized>(
    schedule: &NoiseSchedule,
    x_prev: ArrayView2<'_, f32>,
    t: usize,
    rng: &mut R,
) -> Result<Array2<f32>> {
    let (r, c) = x_prev.dim();
    let eps = standard_normal(rng, r, c);
    forward_step_with_noise(schedule, x_prev, t, eps.view())
}

/// Closed-form `x_t` given `x_0`. `t = 0` returns `x0` unchanged.
pub fn forward_marginal(
    schedule: &NoiseSchedule,
    x0: ArrayView2<'_, f32>,
    t: usize,
    eps: ArrayView2<'_, f32>,
) -> Result<Array2<f32>> {
    if t > schedule.steps() {
        return Err(Error::TimestepOutOfRange {
            t,
            steps: schedule.steps(),
        });
    }
    check_shape(&x0, &eps, "forward_marginal")?;
    if t == 0 {
        return Ok(x0.to_owned());
    }
    let ab = schedule.alpha_bar(t);
    let (ca, cn) = (ab.sqrt() as f32, (1.0 - ab).sqrt() as f32);
    Ok(&x0 * ca + &eps * cn)
}

/// Unweighted squared error between `eps` and the prediction on the noised
/// latents.
#[allow(clippy::too_many_arguments)]
pub fn denoising_loss<P: NoisePredictor + ?Sized>(
    model: &P,
    schedule: &NoiseSchedule,
    x0: ArrayView2<'_, f32>,
    y: ArrayView2<'_, f32>,
    latent: &[usize],
    observed: &[usize],
    t: usize,
    eps: ArrayView2<'_, f32>,
) -> Result<f64> {
    check_task(latent, observed, usize::MAX)?;
    schedule.check(t)?;
    if x0.nrows() != latent.len() || y.nrows() != observed.len() {
        return Err(Error::Shape("frame counts must match index vectors".into()));
    }
    let x_t = forward_marginal(schedule, x0, t, eps)?;
    let pred = model.predict(x_t.view(), y, t, latent, observed)?;
    check_shape(&pred.view(), &eps, "prediction")?;
    Ok(pred
        .iter()
        .zip(eps.iter())
        .map(|(&p, &e)| {
            let d = (e - p) as f64;
            d * d
        })
        .sum())
}

/// Mean of the reverse transition:
/// `(x_t - (1 - a_t) / sqrt(1 - abar_t) * eps_hat) / sqrt(a_t)`.
pub fn reverse_mean(
    schedule: &NoiseSchedule,
    x_t: ArrayView2<'_, f32>,
    eps_hat: ArrayView2<'_, f32>,
    t: usize,
) -> Result<Array2<f32>> {
    schedule.check(t)?;
    check_shape(&x_t, &eps_hat, "reverse_mean")?;
    let a = schedule.alpha(t);
    let coef = ((1.0 - a) / (1.0 - schedule.alpha_bar(t)).sqrt()) as f32;
    let inv = (1.0 / a.sqrt()) as f32;
    Ok((&x_t - &(&eps_hat * coef)) * inv)
}

/// Reverse step with explicit noise `z`; `z` is ignored at `t = 1`.
#[allow(clippy::too_many_arguments)]
pub fn reverse_step_with_noise<P: NoisePredictor + ?Sized>(
    model: &P,
    schedule: &NoiseSchedule,
    x_t: ArrayView2<'_, f32>,
    y: ArrayView2<'_, f32>,
    t: usize,
    latent: &[usize],
    observed: &[usize],
    z: ArrayView2<'_, f32>,
) -> Result<Array2<f32>> {
    schedule.check(t)?;
    let eps_hat = model.predict(x_t, y, t, latent, observed)?;
    let mut mean = reverse_mean(schedule, x_t, eps_hat.view(), t)?;
    if t > 1 {
        check_shape(&x_t, &z, "reverse_step noise")?;
        let s = schedule.sigma(t) as f32;
        mean.zip_mut_with(&z, |m, &zv| *m += s * zv);
    }
    Ok(mean)
}

#[allow(clippy::too_many_arguments)]
pub fn reverse_step<P: NoisePredictor + ?Sized, R: Rng + ?Sized>(
    model: &P,
    schedule: &NoiseSchedule,
    x_t: ArrayView2<'_, f32>,
    y: ArrayView2<'_, f32>,
    t: usize,
    latent: &[usize],
    observed: &[usize],
    rng: &mut R,
) -> Result<Array2<f32>> {
    let (r, c) = x_t.dim();
    let z = if t > 1 {
        standard_normal(rng, r, c)
    } else {
        Array2::zeros((r, c))
    };
    reverse_step_with_noise(model, schedule, x_t, y, t, latent, observed, z.view())
}

/// Draws latent frames for positions `latent` conditioned on observed
/// frames `y` at positions `observed`, running the full reverse chain.
pub fn ddpm_sample<P: NoisePredictor + ?Sized, R: Rng + ?Sized>(
    model: &P,
    schedule: &NoiseSchedule,
    y: ArrayView2<'_, f32>,
    latent: &[usize],
    observed: &[usize],
    rng: &mut R,
) -> Result<Array2<f32>> {
    check_task(latent, observed, model.max_frames())?;
    if y.nrows() != observed.len() || (y.nrows() > 0 && y.ncols() != model.frame_dim()) {
        return Err(Error::Shape(format!(
            "observed frames {:?} for {} indices",
            y.dim(),
            observed.len()
        )));
    }
    let mut x = standard_normal(rng, latent.len(), model.frame_dim());
    for t in (1..=schedule.steps()).rev() {
        x = reverse_step(model, schedule, x.view(), y, t, latent, observed, rng)?;
    }
    Ok(x)
}
