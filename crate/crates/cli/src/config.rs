//! Run settings resolved from defaults, an optional key-value file,
//! `--set key=value` overrides and explicit flags, in increasing priority.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fdm_core::io::KeyValues;

use crate::error::CliError;

pub const SNAPSHOT: &str = "config.resolved.kv";

/// A setting's name and default; `None` marks a required setting.
pub type Default = (&'static str, Option<&'static str>);

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    kv: KeyValues,
}

impl Settings {
    pub fn resolve(
        defaults: &[Default],
        file: Option<&Path>,
        overrides: &[String],
        flags: &[(&'static str, Option<String>)],
    ) -> Result<Self, CliError> {
        let known = |key: &str| defaults.iter().any(|(k, _)| *k == key);
        let mut kv = KeyValues::new();
        for (k, v) in defaults {
            if let Some(v) = v {
                kv.set(*k, v);
            }
        }
        if let Some(path) = file {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            let from_file = KeyValues::parse(&text).map_err(|e| CliError::Usage(e.to_string()))?;
            if let Some((k, _)) = from_file.iter().find(|(k, _)| !known(k)) {
                return Err(CliError::Usage(format!("unknown setting {k} in {}", path.display())));
            }
            kv.merge(&from_file);
        }
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got {o:?}")))?;
            let k = k.trim();
            if !known(k) {
                return Err(CliError::Usage(format!("unknown setting {k}")));
            }
            kv.set(k, v.trim());
        }
        for (k, v) in flags {
            debug_assert!(known(k), "flag {k} missing from defaults");
            if let Some(v) = v {
                kv.set(*k, v);
            }
        }
        if let Some((k, _)) = defaults.iter().find(|(k, _)| kv.get(k).is_none()) {
            return Err(CliError::Usage(format!("missing required setting {k}")));
        }
        Ok(Self { kv })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        let raw = self.str(key)?;
        raw.parse()
            .map_err(|e| CliError::Usage(format!("setting {key}={raw:?}: {e}")))
    }

    pub fn str(&self, key: &str) -> Result<&str, CliError> {
        self.kv
            .get(key)
            .ok_or_else(|| CliError::Usage(format!("missing setting {key}")))
    }

    pub fn path(&self, key: &str) -> Result<PathBuf, CliError> {
        Ok(PathBuf::from(self.str(key)?))
    }

    /// A setting that is optional and empty by default.
    pub fn opt(&self, key: &str) -> Option<&str> {
        self.kv.get(key).filter(|v| !v.is_empty())
    }

    pub fn to_text(&self) -> String {
        self.kv.to_text()
    }

    pub fn write_snapshot(&self, path: &Path) -> Result<(), CliError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, self.to_text())?;
        Ok(())
    }
}

pub fn flag<T: ToString>(key: &'static str, v: &Option<T>) -> (&'static str, Option<String>) {
    (key, v.as_ref().map(ToString::to_string))
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEFAULTS: &[Default] = &[("seed", None), ("steps", Some("10")), ("lr", Some("0.001"))];

    #[test]
    fn flag_beats_override_beats_file_beats_default() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("run.kv");
        fs::write(&file, "steps = 20\nlr = 0.5\nseed = 1\n").unwrap();
        let s = Settings::resolve(
            DEFAULTS,
            Some(&file),
            &["lr=0.25".into()],
            &[flag("steps", &Some(30)), flag("seed", &None::<u64>)],
        )
        .unwrap();
        assert_eq!(s.get::<usize>("steps").unwrap(), 30);
        assert_eq!(s.get::<f64>("lr").unwrap(), 0.25);
        assert_eq!(s.get::<u64>("seed").unwrap(), 1);
        let s = Settings::resolve(DEFAULTS, None, &[], &[flag("seed", &Some(4))]).unwrap();
        assert_eq!(s.get::<usize>("steps").unwrap(), 10);
    }

    #[test]
    fn rejects_missing_unknown_and_malformed() {
        assert!(Settings::resolve(DEFAULTS, None, &[], &[]).is_err());
        assert!(Settings::resolve(DEFAULTS, None, &["bogus=1".into()], &[flag("seed", &Some(1))]).is_err());
        assert!(Settings::resolve(DEFAULTS, None, &["steps".into()], &[flag("seed", &Some(1))]).is_err());
        let s = Settings::resolve(DEFAULTS, None, &["steps=x".into()], &[flag("seed", &Some(1))]).unwrap();
        assert!(matches!(s.get::<usize>("steps"), Err(CliError::Usage(_))));
    }
}
