//! Synthetic datasets with long-range structure and the metrics used to
//! score completions of them.

mod metrics;
mod rooms;
mod town;

pub use metrics::{
    color_accuracy, estimate_speeds, feature_rows, features, frechet_from_stats, frechet_gaussian, gaussian_stats,
    histogram_csv, histogram_svg, outlier_pct, speed_histogram, wasserstein1d, within_threshold, Histogram,
};
pub use rooms::{gen_colored_rooms, RoomsConfig};
pub use town::{gen_town_drive, TownConfig, FPS};

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::io::{decode_videos, encode_videos, KeyValues};
use crate::{Error, Result};

/// Videos of one shape plus generator metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub videos: Vec<Array2<f32>>,
    pub meta: KeyValues,
}

/// `data.fdmv` -> `data.fdmv.kv`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".kv");
    PathBuf::from(s)
}

impl Dataset {
    pub fn new(videos: Vec<Array2<f32>>, meta: KeyValues) -> Result<Self> {
        let d = Self { videos, meta };
        d.check()?;
        Ok(d)
    }

    pub fn check(&self) -> Result<()> {
        let shape = self.videos.first().map(|v| v.dim());
        for v in &self.videos {
            if Some(v.dim()) != shape {
                return Err(Error::Shape("videos differ in shape".into()));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("video contains non-finite values"));
            }
        }
        Ok(())
    }

    pub fn frames(&self) -> usize {
        self.videos.first().map_or(0, |v| v.nrows())
    }

    pub fn frame_dim(&self) -> usize {
        self.videos.first().map_or(0, |v| v.ncols())
    }

    /// Writes the video file and its metadata sidecar.
    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, encode_videos(&self.videos)?)?;
        fs::write(sidecar_path(path), self.meta.to_text())?;
        Ok(())
    }

    /// Reads a video file; the sidecar is optional.
    pub fn load(path: &Path) -> Result<Self> {
        let videos = decode_videos(&fs::read(path)?)?;
        let side = sidecar_path(path);
        let meta = if side.exists() {
            KeyValues::parse(&fs::read_to_string(side)?)?
        } else {
            KeyValues::new()
        };
        Self::new(videos, meta)
    }
}
