use std::path::PathBuf;

use clap::Args;
use fdm_core::evalbench::{color_accuracy, estimate_speeds, outlier_pct, Dataset, FPS};
use fdm_core::model::Model;
use fdm_core::optimize::{optimize_observed, trace_csv, DiffusionStageLoss, OptimizerConfig};
use fdm_core::rng::keyed;
use fdm_core::schemes::sample_video;
use ndarray::{s, Array2};
use rayon::prelude::*;

use super::{load_dataset, resolve_scheme, settings, validation_report, write};
use crate::config::{flag, Default, SNAPSHOT};
use crate::error::CliError;
use crate::Common;

const STREAM_SAMPLE: u64 = 0x7361;

pub const SAMPLES_FILE: &str = "samples.fdmv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const SCHEME_FILE: &str = "scheme.json";

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    /// Videos whose prefixes are completed.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Catalog name or scheme JSON file.
    #[arg(long)]
    scheme: Option<String>,
    /// Frames given at the start of every video.
    #[arg(long)]
    n_obs: Option<usize>,
    /// Index of the first video to complete.
    #[arg(long)]
    first: Option<usize>,
    /// Number of videos to complete (default: all from --first on).
    #[arg(long)]
    videos: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

const SAMPLE_DEFAULTS: &[Default] = &[
    ("model", None),
    ("data", None),
    ("scheme", Some("autoreg")),
    ("n_obs", Some("36")),
    ("first", Some("0")),
    ("videos", Some("")),
    ("out", None),
];

fn selected(data: &Dataset, first: usize, count: Option<usize>) -> Result<Vec<Array2<f32>>, CliError> {
    let end = count.map_or(data.videos.len(), |c| first + c);
    if first >= end || end > data.videos.len() {
        return Err(CliError::Usage(format!(
            "video range {first}..{end} is empty or exceeds the {} videos in the dataset",
            data.videos.len()
        )));
    }
    Ok(data.videos[first..end].to_vec())
}

fn per_video_metrics(
    data: &Dataset,
    truth: &[Array2<f32>],
    done: &[Array2<f32>],
    n_obs: usize,
) -> Result<String, CliError> {
    let generator = data.meta.get("generator").unwrap_or("");
    let mut csv = match generator {
        "town-drive" => String::from("video,rmse,outlier_pct,mean_speed\n"),
        "colored-rooms" => String::from("video,rmse,color_accuracy\n"),
        _ => String::from("video,rmse\n"),
    };
    for (i, (t, d)) in truth.iter().zip(done).enumerate() {
        let diff = &t.slice(s![n_obs.., ..]) - &d.slice(s![n_obs.., ..]);
        let rmse = if diff.is_empty() {
            0.0
        } else {
            (diff.iter().map(|&x| (x as f64).powi(2)).sum::<f64>() / diff.len() as f64).sqrt()
        };
        csv.push_str(&format!("{i},{rmse}"));
        match generator {
            "town-drive" => {
                let speeds = estimate_speeds(d.view(), 10, FPS)?;
                let mean = speeds.iter().sum::<f64>() / speeds.len() as f64;
                csv.push_str(&format!(",{},{mean}", outlier_pct(&speeds, 10.0)?));
            }
            "colored-rooms" => {
                let rooms: usize = data.meta.require("rooms.count")?;
                csv.push_str(&format!(",{}", color_accuracy(d.view(), rooms)?));
            }
            _ => {}
        }
        csv.push('\n');
    }
    Ok(csv)
}

pub fn run_sample(a: SampleArgs) -> Result<(), CliError> {
    let st = settings(
        &a.common,
        SAMPLE_DEFAULTS,
        None,
        vec![
            flag("model", &a.model.as_ref().map(|p| p.display())),
            flag("data", &a.data.as_ref().map(|p| p.display())),
            flag("scheme", &a.scheme),
            flag("n_obs", &a.n_obs),
            flag("first", &a.first),
            flag("videos", &a.videos),
            flag("out", &a.out.as_ref().map(|p| p.display())),
        ],
    )?;
    let (model, _) = Model::load(&st.path("model")?, 0.0)?;
    let data = load_dataset(&st.path("data")?)?;
    let n_obs: usize = st.get("n_obs")?;
    let count = st
        .opt("videos")
        .map(str::parse::<usize>)
        .transpose()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let truth = selected(&data, st.get("first")?, count)?;
    let cfg = &model.denoiser.config;
    if data.frame_dim() != cfg.frame_dim {
        return Err(CliError::Validation(format!(
            "dataset frames have dim {}, model expects {}",
            data.frame_dim(),
            cfg.frame_dim
        )));
    }
    let (scheme, adaptive) = resolve_scheme(st.str("scheme")?, data.frames(), n_obs, cfg.k)?;
    let (ok, report) = validation_report(&scheme);
    if !ok {
        return Err(CliError::Validation(report));
    }
    if scheme.n != data.frames() {
        return Err(CliError::Validation(format!(
            "scheme covers {} frames, videos have {}",
            scheme.n,
            data.frames()
        )));
    }
    let out = st.path("out")?;
    st.write_snapshot(&out.join(SNAPSHOT))?;
    let schedule = model.schedule()?;
    let seed: u64 = st.get("seed")?;

    let done = truth
        .par_iter()
        .enumerate()
        .map(|(i, video)| {
            let mut rng = keyed(seed, &[STREAM_SAMPLE, i as u64]);
            let x = model.scaler.normalize(video);
            let sampled = sample_video(&model.denoiser, &schedule, &x, &scheme, adaptive, &mut rng)?;
            let mut back = model.scaler.denormalize(&sampled);
            back.slice_mut(s![..scheme.n_obs, ..])
                .assign(&video.slice(s![..scheme.n_obs, ..]));
            if back.iter().any(|v| !v.is_finite()) {
                return Err(CliError::Numerical(format!("video {i} sampled non-finite values")));
            }
            Ok(back)
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let result = Dataset::new(done, data.meta.clone())?;
    result.save(&out.join(SAMPLES_FILE))?;
    write(&out.join(SCHEME_FILE), scheme.to_json())?;
    write(
        &out.join(METRICS_FILE),
        per_video_metrics(&data, &truth, &result.videos, scheme.n_obs)?,
    )?;
    eprintln!("completed {} videos into {}", result.videos.len(), out.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    /// Videos used to estimate the loss (the first --videos of them).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Scheme whose latent stages are kept.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    n_obs: Option<usize>,
    /// Observed frames per stage (default: K minus the largest latent set).
    #[arg(long)]
    target: Option<usize>,
    #[arg(long)]
    videos: Option<usize>,
    /// Number of evenly spaced timesteps in the loss estimate.
    #[arg(long)]
    t_grid: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

const OPT_DEFAULTS: &[Default] = &[
    ("model", None),
    ("data", None),
    ("scheme", Some("autoreg")),
    ("n_obs", Some("36")),
    ("target", Some("")),
    ("videos", Some("10")),
    ("t_grid", Some("10")),
    ("out", None),
];

pub fn run_optimize(a: OptimizeArgs) -> Result<(), CliError> {
    let st = settings(
        &a.common,
        OPT_DEFAULTS,
        None,
        vec![
            flag("model", &a.model.as_ref().map(|p| p.display())),
            flag("data", &a.data.as_ref().map(|p| p.display())),
            flag("scheme", &a.scheme),
            flag("n_obs", &a.n_obs),
            flag("target", &a.target),
            flag("videos", &a.videos),
            flag("t_grid", &a.t_grid),
            flag("out", &a.out.as_ref().map(|p| p.display())),
        ],
    )?;
    let (model, _) = Model::load(&st.path("model")?, 0.0)?;
    let data = load_dataset(&st.path("data")?)?;
    let k = model.denoiser.config.k;
    let (base, _) = resolve_scheme(st.str("scheme")?, data.frames(), st.get("n_obs")?, k)?;
    let (ok, report) = validation_report(&base);
    if !ok {
        return Err(CliError::Validation(report));
    }
    let largest = base.stages.iter().map(|s| s.latent.len()).max().unwrap_or(0);
    let target = match st.opt("target") {
        Some(t) => t.parse().map_err(|e| CliError::Usage(format!("target: {e}")))?,
        None => k - largest,
    };
    let schedule = model.schedule()?;
    let seed: u64 = st.get("seed")?;
    let cfg = OptimizerConfig {
        t_grid: schedule.even_grid(st.get("t_grid")?),
        videos_per_eval: st.get("videos")?,
        target_obs_count: target,
        seed,
    };
    cfg.validate(&schedule)?;
    let videos: Vec<_> = selected(&data, 0, Some(cfg.videos_per_eval.min(data.videos.len())))?
        .iter()
        .map(|v| model.scaler.normalize(v))
        .collect();
    let out = st.path("out")?;
    st.write_snapshot(&out.join(SNAPSHOT))?;
    let loss = DiffusionStageLoss {
        model: &model.denoiser,
        schedule: &schedule,
        videos: &videos,
        t_grid: &cfg.t_grid,
        seed,
    };
    let latents: Vec<Vec<usize>> = base.stages.iter().map(|s| s.latent.clone()).collect();
    let (scheme, trace) = optimize_observed(&loss, base.n, base.n_obs, base.k, &latents, target)?;
    write(&out.join(SCHEME_FILE), scheme.to_json())?;
    write(&out.join("trace.csv"), trace_csv(&trace))?;
    eprintln!("optimized {} stages into {}", scheme.stages.len(), out.display());
    Ok(())
}
