use std::path::PathBuf;

use clap::Args;
use fdm_core::rng::keyed;
use fdm_core::schemes::render_svg;
use fdm_core::taskdist::TaskDistribution;

use super::{resolve_scheme, settings, validation_report, write};
use crate::config::{flag, Default};
use crate::error::CliError;
use crate::Common;

#[derive(Debug, Args)]
pub struct InspectSchemeArgs {
    /// Catalog name or scheme JSON file.
    scheme: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    n_obs: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// SVG output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the scheme as JSON here.
    #[arg(long)]
    json: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

const SCHEME_DEFAULTS: &[Default] = &[
    ("scheme", None),
    ("n", Some("100")),
    ("n_obs", Some("36")),
    ("k", Some("10")),
    ("out", Some("")),
    ("json", Some("")),
];

pub fn run_scheme(a: InspectSchemeArgs) -> Result<(), CliError> {
    let s = settings(
        &a.common,
        SCHEME_DEFAULTS,
        Some("0"),
        vec![
            flag("scheme", &a.scheme),
            flag("n", &a.n),
            flag("n_obs", &a.n_obs),
            flag("k", &a.k),
            flag("out", &a.out.as_ref().map(|p| p.display())),
            flag("json", &a.json.as_ref().map(|p| p.display())),
        ],
    )?;
    let (scheme, _) = resolve_scheme(s.str("scheme")?, s.get("n")?, s.get("n_obs")?, s.get("k")?)?;
    let (ok, report) = validation_report(&scheme);
    print!("{report}");
    if let Some(path) = s.opt("out") {
        write(&PathBuf::from(path), render_svg(&scheme))?;
    }
    if let Some(path) = s.opt("json") {
        write(&PathBuf::from(path), scheme.to_json())?;
    }
    if ok {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{} violations", report.lines().count())))
    }
}

#[derive(Debug, Args)]
pub struct InspectTaskdistArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// structured, uniform, uniform-first-k or single.
    #[arg(long)]
    taskdist: Option<String>,
    #[arg(long)]
    draws: Option<usize>,
    /// CSV of per-frame latent and observed counts.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

const TASK_DEFAULTS: &[Default] = &[
    ("n", Some("30")),
    ("k", Some("10")),
    ("taskdist", Some("structured")),
    ("draws", Some("10000")),
    ("out", Some("")),
];

pub fn run_taskdist(a: InspectTaskdistArgs) -> Result<(), CliError> {
    let s = settings(
        &a.common,
        TASK_DEFAULTS,
        None,
        vec![
            flag("n", &a.n),
            flag("k", &a.k),
            flag("taskdist", &a.taskdist),
            flag("draws", &a.draws),
            flag("out", &a.out.as_ref().map(|p| p.display())),
        ],
    )?;
    let (n, k, draws): (usize, usize, usize) = (s.get("n")?, s.get("k")?, s.get("draws")?);
    let dist: TaskDistribution = s.get("taskdist")?;
    let mut rng = keyed(s.get("seed")?, &[]);
    let mut latent = vec![0u64; n];
    let mut observed = vec![0u64; n];
    let (mut sizes, mut invalid) = (0usize, 0usize);
    for _ in 0..draws {
        let task = dist.sample(n, k, &mut rng)?;
        if task.validate(k).is_err() {
            invalid += 1;
        }
        sizes += task.latent.len() + task.observed.len();
        task.latent.iter().for_each(|&i| latent[i] += 1);
        task.observed.iter().for_each(|&i| observed[i] += 1);
    }
    let mut csv = String::from("index,latent,observed\n");
    for i in 0..n {
        csv.push_str(&format!("{i},{},{}\n", latent[i], observed[i]));
    }
    if let Some(path) = s.opt("out") {
        write(&PathBuf::from(path), &csv)?;
    }
    println!(
        "{dist}: {draws} draws, mean frames per task {:.3}, invalid {invalid}",
        sizes as f64 / draws.max(1) as f64
    );
    if invalid > 0 {
        return Err(CliError::Validation(format!("{invalid} invalid tasks")));
    }
    Ok(())
}
