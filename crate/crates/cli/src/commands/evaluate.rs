use std::path::PathBuf;

use clap::Args;
use fdm_core::evalbench::{
    color_accuracy, estimate_speeds, feature_rows, frechet_gaussian, histogram_csv, histogram_svg, outlier_pct,
    speed_histogram, wasserstein1d, within_threshold, Dataset, FPS,
};

use super::{load_dataset, settings, write};
use crate::config::{flag, Default, SNAPSHOT};
use crate::error::CliError;
use crate::Common;

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Reference (held-out) videos.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Completed videos to score.
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Speed above which a lag-10 estimate counts as an outlier.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

const DEFAULTS: &[Default] = &[
    ("data", None),
    ("samples", None),
    ("threshold", Some("10")),
    ("bins", Some("50")),
    ("out", None),
];

fn pooled_speeds(d: &Dataset) -> Result<Vec<f64>, CliError> {
    let mut all = Vec::new();
    for v in &d.videos {
        all.extend(estimate_speeds(v.view(), 10, FPS)?);
    }
    Ok(all)
}

/// `metric,value` rows; metrics that cannot be computed are reported as `nan`.
fn scores(
    reference: &Dataset,
    samples: &Dataset,
    threshold: f64,
    bins: usize,
    out: &std::path::Path,
) -> Result<String, CliError> {
    let generator = reference.meta.get("generator").unwrap_or("");
    let mut rows: Vec<(&str, f64)> = Vec::new();
    if generator == "colored-rooms" {
        let rooms: usize = reference.meta.require("rooms.count")?;
        let mut total = 0.0;
        for v in &samples.videos {
            total += color_accuracy(v.view(), rooms)?;
        }
        rows.push(("color_accuracy", total / samples.videos.len().max(1) as f64));
    } else if samples.frame_dim() >= 2 {
        let (sampled, truth) = (pooled_speeds(samples)?, pooled_speeds(reference)?);
        rows.push(("outlier_pct", outlier_pct(&sampled, threshold)?));
        let (a, b) = (
            within_threshold(&sampled, threshold),
            within_threshold(&truth, threshold),
        );
        let wd = if a.is_empty() || b.is_empty() {
            f64::NAN
        } else {
            wasserstein1d(&a, &b)?
        };
        rows.push(("wasserstein", wd));
        let fd = frechet_gaussian(
            &feature_rows(&samples.videos, FPS)?,
            &feature_rows(&reference.videos, FPS)?,
        )?;
        rows.push(("frechet", fd));
        let hs = speed_histogram(&sampled, bins, 0.0, threshold)?;
        let ht = speed_histogram(&truth, bins, 0.0, threshold)?;
        let series = [("samples", &hs), ("data", &ht)];
        write(&out.join("speed_hist.csv"), histogram_csv(&series)?)?;
        write(&out.join("speed_hist.svg"), histogram_svg(&series)?)?;
    }
    Ok(std::iter::once("metric,value\n".to_string())
        .chain(rows.iter().map(|(k, v)| format!("{k},{v}\n")))
        .collect())
}

pub fn run(a: EvaluateArgs) -> Result<(), CliError> {
    let s = settings(
        &a.common,
        DEFAULTS,
        Some("0"),
        vec![
            flag("data", &a.data.as_ref().map(|p| p.display())),
            flag("samples", &a.samples.as_ref().map(|p| p.display())),
            flag("threshold", &a.threshold),
            flag("bins", &a.bins),
            flag("out", &a.out.as_ref().map(|p| p.display())),
        ],
    )?;
    let reference = load_dataset(&s.path("data")?)?;
    let samples = load_dataset(&s.path("samples")?)?;
    if samples.videos.is_empty() || reference.videos.is_empty() {
        return Err(CliError::Validation("nothing to evaluate".into()));
    }
    if samples.frame_dim() != reference.frame_dim() {
        return Err(CliError::Validation("samples and reference differ in frame dim".into()));
    }
    let out = s.path("out")?;
    s.write_snapshot(&out.join(SNAPSHOT))?;
    let csv = scores(&reference, &samples, s.get("threshold")?, s.get("bins")?, &out)?;
    write(&out.join("metrics.csv"), &csv)?;
    print!("{csv}");
    Ok(())
}
