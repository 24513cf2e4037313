use ndarray::Array2;
use rand::Rng;

use super::Dataset;
use crate::io::KeyValues;
use crate::rng::keyed;
use crate::{Error, Result};

const STREAM_ROOMS: u64 = 0x726f;

#[derive(Debug, Clone, PartialEq)]
pub struct RoomsConfig {
    pub count: usize,
    pub frames: usize,
    pub n_rooms: usize,
    pub palette_size: usize,
    /// Frames spent per visit are drawn uniformly from this range.
    pub dwell: (usize, usize),
    pub seed: u64,
}

impl RoomsConfig {
    pub fn new(count: usize, frames: usize, seed: u64) -> Self {
        Self {
            count,
            frames,
            n_rooms: 6,
            palette_size: 8,
            dwell: (6, 15),
            seed,
        }
    }

    pub fn frame_dim(&self) -> usize {
        self.n_rooms + 2
    }
}

/// Videos of an agent wandering between rooms, each room painted with a
/// palette colour fixed for the whole video. A frame is the one-hot room,
/// the colour index of that room and the progress through the current visit.
pub fn gen_colored_rooms(cfg: &RoomsConfig) -> Result<Dataset> {
    if cfg.palette_size < 2 || cfg.n_rooms < 2 || cfg.frames == 0 {
        return Err(Error::invalid(
            "rooms need palette_size >= 2, n_rooms >= 2 and frames >= 1",
        ));
    }
    if cfg.dwell.0 == 0 || cfg.dwell.0 > cfg.dwell.1 {
        return Err(Error::invalid("dwell range must be non-empty and start at 1 or more"));
    }
    let dim = cfg.frame_dim();
    let videos = (0..cfg.count)
        .map(|v| {
            let mut rng = keyed(cfg.seed, &[STREAM_ROOMS, v as u64]);
            let palette: Vec<usize> = (0..cfg.n_rooms).map(|_| rng.gen_range(0..cfg.palette_size)).collect();
            let mut video = Array2::zeros((cfg.frames, dim));
            let mut room = rng.gen_range(0..cfg.n_rooms);
            let mut f = 0;
            while f < cfg.frames {
                let stay = rng.gen_range(cfg.dwell.0..=cfg.dwell.1);
                for i in 0..stay.min(cfg.frames - f) {
                    let mut row = video.row_mut(f + i);
                    row[room] = 1.0;
                    row[cfg.n_rooms] = palette[room] as f32;
                    row[cfg.n_rooms + 1] = i as f32 / stay as f32;
                }
                f += stay;
                room = (room + rng.gen_range(1..cfg.n_rooms)) % cfg.n_rooms;
            }
            video
        })
        .collect();

    let mut meta = KeyValues::new();
    meta.set("generator", "colored-rooms");
    meta.set("seed", cfg.seed);
    meta.set("rooms.count", cfg.n_rooms);
    meta.set("rooms.palette_size", cfg.palette_size);
    meta.set("rooms.dwell", format!("{},{}", cfg.dwell.0, cfg.dwell.1));
    Dataset::new(videos, meta)
}
