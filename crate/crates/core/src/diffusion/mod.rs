//! Conditional DDPM over frame sets: schedule, forward noising, the
//! denoising objective and ancestral sampling.

mod process;
mod schedule;

pub use process::{
    check_task, ddpm_sample, denoising_loss, forward_marginal, forward_step, forward_step_with_noise, reverse_mean,
    reverse_step, reverse_step_with_noise, NoisePredictor,
};
pub use schedule::NoiseSchedule;
