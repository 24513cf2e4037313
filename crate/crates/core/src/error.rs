use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Autodiff(#[from] fdm_autodiff::Error),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("timestep {t} outside 1..={steps}")]
    TimestepOutOfRange { t: usize, steps: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("index sets overlap at frame {0}")]
    Overlap(usize),
    #[error("empty latent index set")]
    EmptyLatent,
    #[error("frame index {index} outside video of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("{frames} frames exceed the joint budget K={k}")]
    OverBudget { frames: usize, k: usize },
    #[error("invalid sampling scheme: {0}")]
    InvalidScheme(String),
    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: usize },
    #[error("malformed {what}: {reason}")]
    Format { what: &'static str, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn format(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
