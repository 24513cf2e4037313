use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use fdm_core::denoiser::{Denoiser, DenoiserConfig};
use fdm_core::model::{Model, PARAMS_FILE};
use fdm_core::taskdist::TaskDistribution;
use fdm_core::training::{loss_csv, train, Adam, Scaler, TrainConfig};

use super::{load_dataset, settings, write};
use crate::config::{flag, Default, SNAPSHOT};
use crate::error::CliError;
use crate::Common;

pub const LOSS_FILE: &str = "loss.csv";

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    /// Model directory; an existing checkpoint there is resumed.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Frames per training task.
    #[arg(long)]
    k: Option<usize>,
    /// Diffusion steps.
    #[arg(long)]
    t: Option<usize>,
    /// Total number of updates.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lr: Option<f32>,
    /// structured, uniform, uniform-first-k or single.
    #[arg(long)]
    taskdist: Option<String>,
    #[arg(long)]
    channels: Option<usize>,
    #[arg(long)]
    blocks: Option<usize>,
    #[arg(long)]
    heads: Option<usize>,
    #[arg(long)]
    pad: Option<bool>,
    #[arg(long)]
    checkpoint_every: Option<usize>,
    #[command(flatten)]
    common: Common,
}

const DEFAULTS: &[Default] = &[
    ("data", None),
    ("out", None),
    ("k", Some("10")),
    ("t", Some("250")),
    ("steps", Some("20000")),
    ("batch", Some("16")),
    ("lr", Some("0.001")),
    ("taskdist", Some("structured")),
    ("channels", Some("64")),
    ("blocks", Some("2")),
    ("heads", Some("4")),
    ("pad", Some("true")),
    ("beta_start", Some("0.0001")),
    ("beta_end", Some("0.02")),
    ("checkpoint_every", Some("1000")),
    ("log_every", Some("100")),
];

/// Loss rows from an earlier run, up to and including `step`.
fn previous_losses(path: &Path, step: usize) -> Result<Vec<(usize, f64)>, CliError> {
    if !path.exists() {
        return Ok(vec![]);
    }
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for line in text.lines().skip(1) {
        let parsed = line
            .split_once(',')
            .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<f64>().ok()?)));
        match parsed {
            Some((s, l)) if s <= step => out.push((s, l)),
            Some(_) => {}
            None => {
                return Err(CliError::Validation(format!(
                    "malformed row {line:?} in {}",
                    path.display()
                )))
            }
        }
    }
    Ok(out)
}

pub fn run(a: TrainArgs) -> Result<(), CliError> {
    let s = settings(
        &a.common,
        DEFAULTS,
        None,
        vec![
            flag("data", &a.data.as_ref().map(|p| p.display())),
            flag("out", &a.out.as_ref().map(|p| p.display())),
            flag("k", &a.k),
            flag("t", &a.t),
            flag("steps", &a.steps),
            flag("batch", &a.batch),
            flag("lr", &a.lr),
            flag("taskdist", &a.taskdist),
            flag("channels", &a.channels),
            flag("blocks", &a.blocks),
            flag("heads", &a.heads),
            flag("pad", &a.pad),
            flag("checkpoint_every", &a.checkpoint_every),
        ],
    )?;
    let data = load_dataset(&s.path("data")?)?;
    if data.videos.is_empty() {
        return Err(CliError::Validation("dataset has no videos".into()));
    }
    let out = s.path("out")?;
    let lr: f32 = s.get("lr")?;
    let taskdist: TaskDistribution = s.get("taskdist")?;
    let cfg = DenoiserConfig::new(
        data.frame_dim(),
        s.get("channels")?,
        s.get("blocks")?,
        s.get("heads")?,
        s.get("k")?,
        s.get("t")?,
        data.frames(),
    )?;
    let seed: u64 = s.get("seed")?;

    let (mut model, mut adam) = if out.join(PARAMS_FILE).exists() {
        let (model, adam) = Model::load(&out, lr)?;
        if model.denoiser.config != cfg {
            return Err(CliError::Validation(format!(
                "checkpoint in {} has a different network configuration",
                out.display()
            )));
        }
        let adam = adam.unwrap_or_else(|| Adam::new(&model.denoiser.params, lr));
        eprintln!("resuming from step {}", adam.step);
        (model, adam)
    } else {
        let denoiser = Denoiser::init(cfg, seed)?;
        let adam = Adam::new(&denoiser.params, lr);
        let model = Model {
            denoiser,
            scaler: Scaler::fit(&data.videos)?,
            beta_start: s.get("beta_start")?,
            beta_end: s.get("beta_end")?,
        };
        (model, adam)
    };
    adam.lr = lr;
    s.write_snapshot(&out.join(SNAPSHOT))?;

    let videos: Vec<_> = data.videos.iter().map(|v| model.scaler.normalize(v)).collect();
    let schedule = model.schedule()?;
    let total: usize = s.get("steps")?;
    let every: usize = s.get::<usize>("checkpoint_every")?.max(1);
    let log_every: usize = s.get::<usize>("log_every")?.max(1);
    let loss_path = out.join(LOSS_FILE);
    let mut log = previous_losses(&loss_path, adam.step)?;

    // train in chunks so a checkpoint lands every `every` updates
    loop {
        let target = (adam.step / every + 1).saturating_mul(every).min(total);
        let tc = TrainConfig {
            steps: target,
            batch: s.get("batch")?,
            seed,
            taskdist,
            pad: s.get("pad")?,
        };
        let result = train(&mut model.denoiser, &mut adam, &schedule, &videos, &tc, |step, loss| {
            log.push((step, loss));
            if step % log_every == 0 {
                eprintln!("step {step} loss {loss:.5}");
            }
        });
        if let Err(e) = result {
            write(&loss_path, loss_csv(&log))?;
            return Err(e.into());
        }
        model.save(&out, Some(&adam))?;
        write(&loss_path, loss_csv(&log))?;
        if adam.step >= total {
            break;
        }
    }
    eprintln!("trained to step {} in {}", adam.step, out.display());
    Ok(())
}
