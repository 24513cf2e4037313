//! Sampling schemes: ordered stages of latent and observed frame indices,
//! their validity rules, the catalog of generators, and the executor that
//! completes a video stage by stage.

mod adaptive;
mod catalog;
mod exec;
mod render;

pub use adaptive::{adaptive_select, forced_context, nearest_context};
pub use catalog::{evenly_spaced, make_autoreg, make_hierarchy, make_long_range, make_two_res, CatalogScheme};
pub use exec::{sample_video, sample_video_with, StageObserver};
pub use render::render_svg;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    #[serde(rename = "X")]
    pub latent: Vec<usize>,
    #[serde(rename = "Y")]
    pub observed: Vec<usize>,
}

impl Stage {
    pub fn new(latent: Vec<usize>, observed: Vec<usize>) -> Self {
        Self { latent, observed }
    }
}

/// Stages for completing an `n`-frame video whose first `n_obs` frames are
/// given, touching at most `k` frames per stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingScheme {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub n_obs: usize,
    pub stages: Vec<Stage>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyLatent {
        stage: usize,
    },
    OutOfRange {
        stage: usize,
        index: usize,
    },
    Duplicate {
        stage: usize,
        index: usize,
    },
    Overlap {
        stage: usize,
        index: usize,
    },
    OverBudget {
        stage: usize,
        frames: usize,
    },
    /// Conditioning on a frame that is neither given nor sampled earlier.
    Causal {
        stage: usize,
        index: usize,
    },
    /// Sampling a frame that is already given or sampled.
    Resampled {
        stage: usize,
        index: usize,
    },
    Uncovered {
        index: usize,
    },
    PrefixTooLong,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyLatent { stage } => write!(f, "stage {stage}: no latent frames"),
            Self::OutOfRange { stage, index } => write!(f, "stage {stage}: frame {index} out of range"),
            Self::Duplicate { stage, index } => write!(f, "stage {stage}: frame {index} listed twice"),
            Self::Overlap { stage, index } => write!(f, "stage {stage}: frame {index} both latent and observed"),
            Self::OverBudget { stage, frames } => write!(f, "stage {stage}: {frames} frames exceed K"),
            Self::Causal { stage, index } => {
                write!(f, "stage {stage}: conditions on frame {index} before it is available")
            }
            Self::Resampled { stage, index } => write!(f, "stage {stage}: frame {index} is already available"),
            Self::Uncovered { index } => write!(f, "frame {index} is never sampled"),
            Self::PrefixTooLong => write!(f, "n_obs exceeds N"),
        }
    }
}

impl SamplingScheme {
    /// Every rule violation, in stage order, with coverage gaps last.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.n_obs > self.n {
            out.push(Violation::PrefixTooLong);
            return out;
        }
        let mut available = vec![false; self.n];
        available[..self.n_obs].iter_mut().for_each(|a| *a = true);
        for (s, stage) in self.stages.iter().enumerate() {
            if stage.latent.is_empty() {
                out.push(Violation::EmptyLatent { stage: s });
            }
            let frames = stage.latent.len() + stage.observed.len();
            if frames > self.k {
                out.push(Violation::OverBudget { stage: s, frames });
            }
            let mut seen = std::collections::BTreeSet::new();
            for (is_latent, list) in [(true, &stage.latent), (false, &stage.observed)] {
                for &i in list.iter() {
                    if i >= self.n {
                        out.push(Violation::OutOfRange { stage: s, index: i });
                        continue;
                    }
                    if !seen.insert(i) {
                        if is_latent || !stage.latent.contains(&i) {
                            out.push(Violation::Duplicate { stage: s, index: i });
                        } else {
                            out.push(Violation::Overlap { stage: s, index: i });
                        }
                        continue;
                    }
                    if is_latent && available[i] {
                        out.push(Violation::Resampled { stage: s, index: i });
                    }
                    if !is_latent && !available[i] {
                        out.push(Violation::Causal { stage: s, index: i });
                    }
                }
            }
            for &i in &stage.latent {
                if i < self.n {
                    available[i] = true;
                }
            }
        }
        for (i, &a) in available.iter().enumerate() {
            if !a {
                out.push(Violation::Uncovered { index: i });
            }
        }
        out
    }

    pub fn validate(&self) -> std::result::Result<(), Vec<Violation>> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }

    /// Validation as a crate error listing every violation.
    pub fn check(&self) -> Result<()> {
        self.validate()
            .map_err(|v| Error::InvalidScheme(v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }

    /// Parses a scheme document. Structural validity is checked separately.
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
