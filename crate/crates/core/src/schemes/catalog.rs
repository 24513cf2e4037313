use std::fmt;
use std::str::FromStr;

use super::{nearest_context, SamplingScheme, Stage};
use crate::{Error, Result};

/// `m` indices spread evenly over `lo..=hi`, both ends included when
/// `m >= 2`; a single index is `hi`. Duplicates from rounding are removed.
pub fn evenly_spaced(lo: usize, hi: usize, m: usize) -> Vec<usize> {
    if m == 0 || hi < lo {
        return vec![];
    }
    if m == 1 {
        return vec![hi];
    }
    let m = m.min(hi - lo + 1);
    let mut out: Vec<usize> = (0..m)
        .map(|i| lo + ((i * (hi - lo)) as f64 / (m - 1) as f64).round() as usize)
        .collect();
    out.dedup();
    out
}

fn check_sizes(n: usize, n_obs: usize, k: usize) -> Result<()> {
    if n == 0 || k < 2 || n_obs > n {
        return Err(Error::invalid(format!(
            "need N >= 1, K >= 2 and n_obs <= N (N={n}, n_obs={n_obs}, K={k})"
        )));
    }
    Ok(())
}

/// Latent frames per stage and conditioning frames per stage.
fn split(k: usize) -> (usize, usize) {
    (k / 2, k - k / 2)
}

/// Next `floor(K/2)` frames conditioned on the `ceil(K/2)` frames right
/// before them.
pub fn make_autoreg(n: usize, n_obs: usize, k: usize) -> Result<SamplingScheme> {
    check_sizes(n, n_obs, k)?;
    let (h, c) = split(k);
    let mut stages = Vec::new();
    let mut next = n_obs;
    while next < n {
        let end = (next + h).min(n);
        stages.push(Stage::new(
            (next..end).collect(),
            (next.saturating_sub(c)..next).collect(),
        ));
        next = end;
    }
    Ok(SamplingScheme { n, k, n_obs, stages })
}

/// Autoregressive latents; the context is the `ceil(c/2)` most recent
/// frames plus up to `floor(c/2)` frames evenly spaced over the given
/// prefix (excluding the recent ones), where `c = ceil(K/2)`.
pub fn make_long_range(n: usize, n_obs: usize, k: usize) -> Result<SamplingScheme> {
    check_sizes(n, n_obs, k)?;
    let (h, c) = split(k);
    let (recent_count, far_count) = (c - c / 2, c / 2);
    let mut stages = Vec::new();
    let mut next = n_obs;
    while next < n {
        let end = (next + h).min(n);
        let recent_start = next.saturating_sub(recent_count);
        let prefix_end = n_obs.min(recent_start);
        let mut y = if prefix_end > 0 {
            evenly_spaced(0, prefix_end - 1, far_count)
        } else {
            vec![]
        };
        y.extend(recent_start..next);
        stages.push(Stage::new((next..end).collect(), y));
        next = end;
    }
    Ok(SamplingScheme { n, k, n_obs, stages })
}

fn available_list(avail: &[bool]) -> Vec<usize> {
    avail.iter().enumerate().filter(|(_, &a)| a).map(|(i, _)| i).collect()
}

fn push_stage(stages: &mut Vec<Stage>, avail: &mut [bool], latent: Vec<usize>, k: usize) {
    let y = nearest_context(&available_list(avail), &latent, k - latent.len());
    for &i in &latent {
        avail[i] = true;
    }
    stages.push(Stage::new(latent, y));
}

/// Maximal runs of not-yet-available frames.
fn gaps(avail: &[bool]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut run = Vec::new();
    for (i, &a) in avail.iter().enumerate() {
        if a {
            if !run.is_empty() {
                out.push(std::mem::take(&mut run));
            }
        } else {
            run.push(i);
        }
    }
    if !run.is_empty() {
        out.push(run);
    }
    out
}

/// Splits `frames` into `ceil(len / h)` consecutive groups of near-equal size.
fn balanced_groups(frames: &[usize], h: usize) -> Vec<Vec<usize>> {
    let parts = frames.len().div_ceil(h);
    (0..parts)
        .map(|p| frames[p * frames.len() / parts..(p + 1) * frames.len() / parts].to_vec())
        .collect()
}

/// Coarse-to-fine scheme. Level 1 samples `min(floor(K/2), N - n_obs)`
/// frames spread over the unobserved span (the last one at `N - 1`),
/// conditioned on frames evenly spaced over the prefix. With three levels,
/// an intermediate pass places frames at roughly the square root of the
/// level-1 spacing. The final level fills every remaining gap in balanced
/// consecutive groups, each conditioned on the nearest available frames.
pub fn make_hierarchy(n: usize, n_obs: usize, k: usize, levels: usize) -> Result<SamplingScheme> {
    check_sizes(n, n_obs, k)?;
    if !(2..=3).contains(&levels) {
        return Err(Error::invalid(format!("hierarchy levels must be 2 or 3, got {levels}")));
    }
    let (h, _) = split(k);
    let mut stages = Vec::new();
    let mut avail = vec![false; n];
    avail[..n_obs].iter_mut().for_each(|a| *a = true);
    let span = n - n_obs;
    if span == 0 {
        return Ok(SamplingScheme { n, k, n_obs, stages });
    }
    let m = h.min(span);
    let level1: Vec<usize> = if n_obs == 0 {
        evenly_spaced(0, n - 1, m)
    } else {
        (0..m)
            .map(|i| n_obs - 1 + (((i + 1) * span) as f64 / m as f64).round() as usize)
            .collect()
    };
    let y1 = if n_obs > 0 {
        evenly_spaced(0, n_obs - 1, (k - level1.len()).min(n_obs))
    } else {
        vec![]
    };
    for &i in &level1 {
        avail[i] = true;
    }
    stages.push(Stage::new(level1, y1));

    if levels == 3 {
        let spacing = span as f64 / m as f64;
        let step = spacing.sqrt().max(1.0);
        let mut intermediate = Vec::new();
        for gap in gaps(&avail) {
            let (a, b) = (gap[0] as f64 - 1.0, *gap.last().unwrap_or(&gap[0]) as f64 + 1.0);
            let pieces = ((b - a) / step).round().max(1.0) as usize;
            for p in 1..pieces {
                let idx = (a + (p as f64 * (b - a) / pieces as f64).round()) as usize;
                if idx < n && !avail[idx] && !intermediate.contains(&idx) {
                    intermediate.push(idx);
                }
            }
        }
        for chunk in intermediate.chunks(h) {
            push_stage(&mut stages, &mut avail, chunk.to_vec(), k);
        }
    }

    for gap in gaps(&avail) {
        for group in balanced_groups(&gap, h) {
            push_stage(&mut stages, &mut avail, group, k);
        }
    }
    Ok(SamplingScheme { n, k, n_obs, stages })
}

/// Two resolutions: first every `skip`-th frame after the prefix, in groups
/// of `ceil(K/2)` conditioned on the `floor(K/2)` previous stride-aligned
/// frames; then the remaining frames in groups of `floor(K/2)` conditioned
/// on their nearest available neighbours.
pub fn make_two_res(n: usize, n_obs: usize, k: usize, skip: usize) -> Result<SamplingScheme> {
    check_sizes(n, n_obs, k)?;
    if skip < 2 {
        return Err(Error::invalid(format!(
            "two-resolution stride must be >= 2, got {skip}"
        )));
    }
    let (h, c) = split(k);
    let mut avail = vec![false; n];
    avail[..n_obs].iter_mut().for_each(|a| *a = true);
    let anchor = n_obs as i64 - 1;
    let coarse: Vec<usize> = (1..)
        .map(|j| anchor + skip as i64 * j)
        .take_while(|&f| f < n as i64)
        .map(|f| f as usize)
        .collect();
    let mut stages = Vec::new();
    for group in coarse.chunks(c) {
        let f = group[0] as i64;
        let y: Vec<usize> = (1..=h as i64)
            .map(|j| f - skip as i64 * j)
            .filter(|&i| i >= 0 && avail[i as usize])
            .map(|i| i as usize)
            .rev()
            .collect();
        for &i in group {
            avail[i] = true;
        }
        stages.push(Stage::new(group.to_vec(), y));
    }
    let rest: Vec<usize> = (0..n).filter(|&i| !avail[i]).collect();
    for group in rest.chunks(h) {
        push_stage(&mut stages, &mut avail, group.to_vec(), k);
    }
    Ok(SamplingScheme { n, k, n_obs, stages })
}

/// The named generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatalogScheme {
    Autoreg,
    LongRange,
    Hierarchy2,
    Hierarchy3,
    TwoRes {
        skip: usize,
    },
    /// Hierarchy-2 latents with context chosen at sampling time.
    AdHierarchy2,
}

impl CatalogScheme {
    pub const ALL: [CatalogScheme; 6] = [
        Self::Autoreg,
        Self::LongRange,
        Self::Hierarchy2,
        Self::Hierarchy3,
        Self::TwoRes { skip: 2 },
        Self::AdHierarchy2,
    ];

    /// For the adaptive entry this is the static Hierarchy-2 layout; its
    /// contexts are replaced while sampling.
    pub fn build(&self, n: usize, n_obs: usize, k: usize) -> Result<SamplingScheme> {
        match *self {
            Self::Autoreg => make_autoreg(n, n_obs, k),
            Self::LongRange => make_long_range(n, n_obs, k),
            Self::Hierarchy2 | Self::AdHierarchy2 => make_hierarchy(n, n_obs, k, 2),
            Self::Hierarchy3 => make_hierarchy(n, n_obs, k, 3),
            Self::TwoRes { skip } => make_two_res(n, n_obs, k, skip),
        }
    }

    pub fn is_adaptive(&self) -> bool {
        matches!(self, Self::AdHierarchy2)
    }
}

impl FromStr for CatalogScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "autoreg" => Ok(Self::Autoreg),
            "long-range" => Ok(Self::LongRange),
            "hierarchy2" => Ok(Self::Hierarchy2),
            "hierarchy3" => Ok(Self::Hierarchy3),
            "two-res" => Ok(Self::TwoRes { skip: 2 }),
            "ad-hierarchy2" => Ok(Self::AdHierarchy2),
            other => match other.strip_prefix("two-res-").map(str::parse) {
                Some(Ok(skip)) => Ok(Self::TwoRes { skip }),
                _ => Err(Error::invalid(format!("unknown scheme {other:?}"))),
            },
        }
    }
}

impl fmt::Display for CatalogScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Autoreg => f.write_str("autoreg"),
            Self::LongRange => f.write_str("long-range"),
            Self::Hierarchy2 => f.write_str("hierarchy2"),
            Self::Hierarchy3 => f.write_str("hierarchy3"),
            Self::TwoRes { skip: 2 } => f.write_str("two-res"),
            Self::TwoRes { skip } => write!(f, "two-res-{skip}"),
            Self::AdHierarchy2 => f.write_str("ad-hierarchy2"),
        }
    }
}
