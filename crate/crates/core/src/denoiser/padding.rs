use fdm_autodiff::{Graph, ParamVars, Tensor, Var};
use ndarray::{Array2, Axis};
use rand::seq::index::sample;
use rand::Rng;

use super::{forward, DenoiserConfig, FrameSet};
use crate::diffusion::{check_task, forward_marginal, NoiseSchedule};
use crate::rng::standard_normal;
use crate::{Error, Result};

/// One denoising target: clean latents `x0` at `latent`, clean conditioning
/// frames `y` at `observed`, a diffusion step and its noise.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub x0: Array2<f32>,
    pub y: Array2<f32>,
    pub latent: Vec<usize>,
    pub observed: Vec<usize>,
    pub t: usize,
    pub eps: Array2<f32>,
}

impl TrainingExample {
    /// Cuts `(latent, observed)` out of `video` and attaches a step and noise.
    pub fn from_video(
        video: &Array2<f32>,
        latent: &[usize],
        observed: &[usize],
        t: usize,
        eps: Array2<f32>,
    ) -> Result<Self> {
        let n = video.nrows();
        for &i in latent.iter().chain(observed) {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, len: n });
            }
        }
        if eps.dim() != (latent.len(), video.ncols()) {
            return Err(Error::Shape("noise must match the latent frames".into()));
        }
        Ok(Self {
            x0: video.select(Axis(0), latent),
            y: video.select(Axis(0), observed),
            latent: latent.to_vec(),
            observed: observed.to_vec(),
            t,
            eps,
        })
    }

    pub fn frames(&self) -> usize {
        self.latent.len() + self.observed.len()
    }
}

/// A training slot of at most `K` rows holding one or more examples that
/// never attend to each other. The first segment is the primary example;
/// any further segments are padding drawn from other videos.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedSlot {
    pub segments: Vec<TrainingExample>,
}

impl PaddedSlot {
    pub fn single(example: TrainingExample) -> Self {
        Self {
            segments: vec![example],
        }
    }

    pub fn rows(&self) -> usize {
        self.segments.iter().map(TrainingExample::frames).sum()
    }

    /// Per-segment row layout is `[latent rows, observed rows]`; rows of
    /// segment `s` carry group id `s`.
    pub fn frame_set(
        &self,
        schedule: &NoiseSchedule,
        frame_dim: usize,
    ) -> Result<(FrameSet<f32>, Vec<usize>, Array2<f32>)> {
        let rows = self.rows();
        let mut data = Vec::with_capacity(rows * frame_dim);
        let (mut observed, mut t, mut pos, mut group) = (vec![], vec![], vec![], vec![]);
        let mut latent_rows = Vec::new();
        let mut targets = Vec::new();
        for (s, ex) in self.segments.iter().enumerate() {
            check_task(&ex.latent, &ex.observed, usize::MAX)?;
            if ex.x0.ncols() != frame_dim || (ex.y.nrows() > 0 && ex.y.ncols() != frame_dim) {
                return Err(Error::Shape(format!("segment {s} frame width")));
            }
            let x_t = forward_marginal(schedule, ex.x0.view(), ex.t, ex.eps.view())?;
            for r in 0..ex.latent.len() {
                latent_rows.push(pos.len());
                data.extend(x_t.row(r).iter().copied());
                targets.extend(ex.eps.row(r).iter().copied());
                observed.push(false);
                pos.push(ex.latent[r]);
            }
            for r in 0..ex.observed.len() {
                data.extend(ex.y.row(r).iter().copied());
                observed.push(true);
                pos.push(ex.observed[r]);
            }
            t.extend(std::iter::repeat_n(ex.t, ex.frames()));
            group.extend(std::iter::repeat_n(s, ex.frames()));
        }
        let targets =
            Array2::from_shape_vec((latent_rows.len(), frame_dim), targets).map_err(|e| Error::Shape(e.to_string()))?;
        let set = FrameSet {
            frames: Tensor::matrix(rows, frame_dim, data)?,
            observed,
            t,
            pos,
            group,
        };
        Ok((set, latent_rows, targets))
    }
}

/// Fills `example` up to `k` rows with latent frames from one filler video
/// chosen uniformly among `fillers` (skipping index `exclude` when another
/// choice exists). Filler positions are drawn uniformly without replacement
/// and keep their true indices; the filler gets its own step and noise.
pub fn pad_example<R: Rng + ?Sized>(
    example: TrainingExample,
    fillers: &[Array2<f32>],
    exclude: Option<usize>,
    k: usize,
    steps: usize,
    rng: &mut R,
) -> Result<PaddedSlot> {
    let used = example.frames();
    if used > k {
        return Err(Error::OverBudget { frames: used, k });
    }
    if used == k {
        return Ok(PaddedSlot::single(example));
    }
    if fillers.is_empty() {
        return Err(Error::invalid("padding needs at least one filler video"));
    }
    let choices: Vec<usize> = (0..fillers.len()).filter(|&i| Some(i) != exclude).collect();
    let pick = if choices.is_empty() {
        0
    } else {
        choices[rng.gen_range(0..choices.len())]
    };
    let video = &fillers[pick];
    let count = (k - used).min(video.nrows());
    let mut positions = sample(rng, video.nrows(), count).into_vec();
    positions.sort_unstable();
    let t = rng.gen_range(1..=steps);
    let eps = standard_normal(rng, count, video.ncols());
    let filler = TrainingExample::from_video(video, &positions, &[], t, eps)?;
    Ok(PaddedSlot {
        segments: vec![example, filler],
    })
}

pub fn pad_batch<R: Rng + ?Sized>(
    examples: Vec<TrainingExample>,
    fillers: &[Array2<f32>],
    k: usize,
    steps: usize,
    rng: &mut R,
) -> Result<Vec<PaddedSlot>> {
    examples
        .into_iter()
        .map(|ex| pad_example(ex, fillers, None, k, steps, rng))
        .collect()
}

/// Sum of squared noise-prediction errors over every latent row of the
/// slot, padding included.
pub fn slot_loss(
    g: &Graph<'_, f32>,
    vars: &ParamVars,
    cfg: &DenoiserConfig,
    schedule: &NoiseSchedule,
    slot: &PaddedSlot,
) -> Result<Var> {
    if slot.rows() > cfg.k {
        return Err(Error::OverBudget {
            frames: slot.rows(),
            k: cfg.k,
        });
    }
    let (set, latent_rows, targets) = slot.frame_set(schedule, cfg.frame_dim)?;
    let out = forward(g, vars, cfg, &set)?;
    let pred = g.gather_rows(out, &latent_rows)?;
    let target = g.constant(Tensor::matrix(
        targets.nrows(),
        targets.ncols(),
        targets.iter().copied().collect(),
    )?)?;
    let diff = g.sub(target, pred)?;
    Ok(g.sum_squares(diff)?)
}
