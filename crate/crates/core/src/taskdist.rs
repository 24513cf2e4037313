//! Training-task distributions over `(X, Y)` index pairs.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskSample {
    /// Sorted latent indices.
    pub latent: Vec<usize>,
    /// Sorted observed indices.
    pub observed: Vec<usize>,
    pub n: usize,
}

impl TaskSample {
    /// Checks non-empty latents, disjointness, the `k` budget and range.
    pub fn validate(&self, k: usize) -> Result<()> {
        crate::diffusion::check_task(&self.latent, &self.observed, k)?;
        if let Some(&i) = self.latent.iter().chain(&self.observed).find(|&&i| i >= self.n) {
            return Err(Error::IndexOutOfRange { index: i, len: self.n });
        }
        Ok(())
    }
}

/// One regularly spaced group of the structured distribution, before
/// discretization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Group {
    pub count: usize,
    pub spacing: f64,
    pub start: f64,
    pub observed: bool,
}

impl Group {
    /// `floor(start + spacing * i)` for each member, dropping any that fall
    /// outside `0..n`.
    pub fn indices(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.count)
            .map(|i| (self.start + self.spacing * i as f64).floor())
            .filter(move |&v| v >= 0.0 && v < n as f64)
            .map(|v| v as usize)
    }
}

/// Draws `count ~ U{1..k}`, `spacing ~ LogUniform(1, (n-1)/count)`,
/// `start ~ U(0, n - (count-1) * spacing)` and a fair observed flag.
pub fn draw_group<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Group {
    let count = rng.gen_range(1..=k);
    let upper = (n as f64 - 1.0) / count as f64;
    let u: f64 = rng.gen();
    let spacing = if upper > 0.0 { (u * upper.ln()).exp() } else { 1.0 };
    let hi = n as f64 - (count as f64 - 1.0) * spacing;
    let start = rng.gen::<f64>() * hi;
    let observed = rng.gen_bool(0.5);
    Group {
        count,
        spacing,
        start,
        observed,
    }
}

/// Regularly spaced groups with log-uniform spacing, each either latent or
/// observed, added until the next group would overflow `k`. The first
/// non-empty group is always latent. Also stops once all `n` frames are
/// used.
pub fn sample_task_structured<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> TaskSample {
    let mut latent = BTreeSet::new();
    let mut observed = BTreeSet::new();
    if n == 0 || k == 0 {
        return TaskSample {
            latent: vec![],
            observed: vec![],
            n,
        };
    }
    // With n <= k every frame can end up used, after which no group could
    // ever overflow; stop there.
    while latent.len() + observed.len() < n {
        let g = draw_group(n, k, rng);
        let group: BTreeSet<usize> = g
            .indices(n)
            .filter(|i| !latent.contains(i) && !observed.contains(i))
            .collect();
        if latent.len() + observed.len() + group.len() > k {
            break;
        }
        if latent.is_empty() || !g.observed {
            latent.extend(group);
        } else {
            observed.extend(group);
        }
    }
    TaskSample {
        latent: latent.into_iter().collect(),
        observed: observed.into_iter().collect(),
        n,
    }
}

/// Where the uniform ablation draws its positions from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UniformSupport {
    /// Any frame of the video.
    #[default]
    Video,
    /// Only the first `k` frames.
    FirstK,
}

/// `n_total ~ U{1..k}` distinct positions, of which the first
/// `n_obs ~ U{0..n_total-1}` drawn are observed.
pub fn sample_task_uniform<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    support: UniformSupport,
    rng: &mut R,
) -> Result<TaskSample> {
    if k == 0 || n < k {
        return Err(Error::invalid(format!("uniform tasks need 1 <= k <= n (n={n}, k={k})")));
    }
    let n_total = rng.gen_range(1..=k);
    let pool = match support {
        UniformSupport::Video => n,
        UniformSupport::FirstK => k,
    };
    let z = sample(rng, pool, n_total).into_vec();
    let n_obs = rng.gen_range(0..n_total);
    let mut observed = z[..n_obs].to_vec();
    let mut latent = z[n_obs..].to_vec();
    observed.sort_unstable();
    latent.sort_unstable();
    Ok(TaskSample { latent, observed, n })
}

/// Contiguous block of `k` frames at a uniform offset: the first `ceil(k/2)`
/// observed, the remaining `floor(k/2)` latent.
pub fn sample_task_single<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<TaskSample> {
    if k < 2 || n < k {
        return Err(Error::invalid(format!("single task needs 2 <= k <= n (n={n}, k={k})")));
    }
    let offset = rng.gen_range(0..=n - k);
    let c = k - k / 2;
    Ok(TaskSample {
        latent: (offset + c..offset + k).collect(),
        observed: (offset..offset + c).collect(),
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskDistribution {
    Structured,
    Uniform(UniformSupport),
    Single,
}

impl TaskDistribution {
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, k: usize, rng: &mut R) -> Result<TaskSample> {
        match self {
            Self::Structured => Ok(sample_task_structured(n, k, rng)),
            Self::Uniform(support) => sample_task_uniform(n, k, *support, rng),
            Self::Single => sample_task_single(n, k, rng),
        }
    }
}

impl FromStr for TaskDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "structured" => Ok(Self::Structured),
            "uniform" => Ok(Self::Uniform(UniformSupport::Video)),
            "uniform-first-k" => Ok(Self::Uniform(UniformSupport::FirstK)),
            "single" => Ok(Self::Single),
            other => Err(Error::invalid(format!("unknown task distribution {other:?}"))),
        }
    }
}

impl fmt::Display for TaskDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Structured => "structured",
            Self::Uniform(UniformSupport::Video) => "uniform",
            Self::Uniform(UniformSupport::FirstK) => "uniform-first-k",
            Self::Single => "single",
        })
    }
}
