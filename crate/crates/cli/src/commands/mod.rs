pub mod data;
pub mod evaluate;
pub mod inspect;
pub mod sample;
pub mod train;

use std::fs;
use std::path::Path;

use fdm_core::evalbench::Dataset;
use fdm_core::schemes::{CatalogScheme, SamplingScheme};

use crate::config::{flag, Default, Settings};
use crate::error::CliError;
use crate::Common;

/// Resolves settings, with `seed` appended to the command's table and
/// required unless `seed_default` is given.
pub fn settings(
    common: &Common,
    defaults: &[Default],
    seed_default: Option<&'static str>,
    mut flags: Vec<(&'static str, Option<String>)>,
) -> Result<Settings, CliError> {
    let mut all = defaults.to_vec();
    all.push(("seed", seed_default));
    flags.push(flag("seed", &common.seed));
    Settings::resolve(&all, common.config.as_deref(), &common.overrides, &flags)
}

pub fn load_dataset(path: &Path) -> Result<Dataset, CliError> {
    if !path.exists() {
        return Err(CliError::Usage(format!("dataset {} does not exist", path.display())));
    }
    Ok(Dataset::load(path)?)
}

/// A catalog name, or the path of a scheme JSON file. Returns the scheme
/// and whether contexts are chosen adaptively.
pub fn resolve_scheme(spec: &str, n: usize, n_obs: usize, k: usize) -> Result<(SamplingScheme, bool), CliError> {
    if let Ok(name) = spec.parse::<CatalogScheme>() {
        return Ok((name.build(n, n_obs, k)?, name.is_adaptive()));
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(CliError::Usage(format!(
            "{spec:?} is neither a catalog scheme nor a scheme file"
        )));
    }
    let scheme = SamplingScheme::from_json(&fs::read_to_string(path)?)?;
    Ok((scheme, false))
}

/// Violations as one line each, or `ok` with the stage count.
pub fn validation_report(scheme: &SamplingScheme) -> (bool, String) {
    match scheme.validate() {
        Ok(()) => (
            true,
            format!(
                "ok: {} stages over N={} with n_obs={} and K={}\n",
                scheme.stages.len(),
                scheme.n,
                scheme.n_obs,
                scheme.k
            ),
        ),
        Err(v) => (false, v.iter().map(|x| format!("{x}\n")).collect()),
    }
}

pub fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    Ok(())
}
