use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;

use super::Dataset;
use crate::io::KeyValues;
use crate::rng::keyed;
use crate::{Error, Result};

pub const FPS: f64 = 10.0;

const STREAM_TOWN: u64 = 0x746f;

#[derive(Debug, Clone, PartialEq)]
pub struct TownConfig {
    pub count: usize,
    pub frames: usize,
    /// Intersections per side.
    pub grid_size: usize,
    /// Road length between adjacent intersections.
    pub block: f64,
    pub v_max: f64,
    /// Fraction of intersections with a light.
    pub light_density: f64,
    pub seed: u64,
}

impl TownConfig {
    pub fn new(count: usize, frames: usize, seed: u64) -> Self {
        Self {
            count,
            frames,
            grid_size: 4,
            block: 10.0,
            v_max: 3.0,
            light_density: 0.3,
            seed,
        }
    }
}

struct Town<'a> {
    cfg: &'a TownConfig,
    lights: Vec<bool>,
}

impl Town<'_> {
    fn point(&self, node: usize) -> (f64, f64) {
        let g = self.cfg.grid_size;
        ((node % g) as f64 * self.cfg.block, (node / g) as f64 * self.cfg.block)
    }

    /// Intersections along an L-shaped route, excluding the start.
    fn route<R: Rng>(&self, from: usize, to: usize, rng: &mut R) -> Vec<usize> {
        let g = self.cfg.grid_size;
        let (mut cx, mut cy) = (from % g, from / g);
        let (tx, ty) = (to % g, to / g);
        let x_first = rng.gen_bool(0.5);
        let mut out = Vec::new();
        for phase in 0..2 {
            if (phase == 0) == x_first {
                while cx != tx {
                    cx = if cx < tx { cx + 1 } else { cx - 1 };
                    out.push(cy * g + cx);
                }
            } else {
                while cy != ty {
                    cy = if cy < ty { cy + 1 } else { cy - 1 };
                    out.push(cy * g + cx);
                }
            }
        }
        out
    }

    fn drive<R: Rng>(&self, rng: &mut R) -> Array2<f32> {
        let nodes = self.cfg.grid_size * self.cfg.grid_size;
        let speed = self.cfg.v_max * rng.gen_range(0.5..=1.0);
        let per_frame = speed / FPS;
        let mut node = rng.gen_range(0..nodes);
        let mut pos = self.point(node);
        let mut route: Vec<usize> = Vec::new();
        let mut pause = 0usize;
        let mut video = Array2::zeros((self.cfg.frames, 2));
        for f in 0..self.cfg.frames {
            video[[f, 0]] = pos.0 as f32;
            video[[f, 1]] = pos.1 as f32;
            if pause > 0 {
                pause -= 1;
                continue;
            }
            if route.is_empty() {
                let target = (node + rng.gen_range(1..nodes)) % nodes;
                route = self.route(node, target, rng);
                route.reverse();
            }
            let Some(&next) = route.last() else { continue };
            let goal = self.point(next);
            let (dx, dy) = (goal.0 - pos.0, goal.1 - pos.1);
            let dist = dx.abs() + dy.abs();
            if dist <= per_frame {
                pos = goal;
                node = next;
                route.pop();
                if self.lights[node] && rng.gen_bool(0.5) {
                    pause = rng.gen_range(5..=30);
                }
            } else {
                pos.0 += dx.signum() * per_frame.min(dx.abs());
                pos.1 += dy.signum() * per_frame.min(dy.abs());
            }
        }
        video
    }
}

/// A point agent driving between random intersections of a square street
/// grid at a per-video cruise speed of at most `v_max` units/s (10 frames
/// per second), sometimes waiting at lights. Frames are `(x, y)`.
pub fn gen_town_drive(cfg: &TownConfig) -> Result<Dataset> {
    if cfg.frames < 20 {
        return Err(Error::invalid(format!(
            "town videos need at least 20 frames, got {}",
            cfg.frames
        )));
    }
    if cfg.grid_size < 2 || !(cfg.block > 0.0) || !(cfg.v_max > 0.0) || !(0.0..=1.0).contains(&cfg.light_density) {
        return Err(Error::invalid(
            "town needs grid_size >= 2, positive block and v_max, light_density in [0, 1]",
        ));
    }
    let nodes = cfg.grid_size * cfg.grid_size;
    let mut rng = keyed(cfg.seed, &[STREAM_TOWN]);
    let mut order: Vec<usize> = (0..nodes).collect();
    order.shuffle(&mut rng);
    let mut lights = vec![false; nodes];
    let lit = (cfg.light_density * nodes as f64).round() as usize;
    for &i in &order[..lit] {
        lights[i] = true;
    }
    let town = Town { cfg, lights };
    let videos = (0..cfg.count)
        .map(|v| town.drive(&mut keyed(cfg.seed, &[STREAM_TOWN, v as u64])))
        .collect();

    let mut meta = KeyValues::new();
    meta.set("generator", "town-drive");
    meta.set("seed", cfg.seed);
    meta.set("town.grid_size", cfg.grid_size);
    meta.set("town.block", cfg.block);
    meta.set("town.v_max", cfg.v_max);
    meta.set("town.fps", FPS);
    meta.set("town.light_density", cfg.light_density);
    let lit: Vec<String> = (0..nodes).filter(|&i| town.lights[i]).map(|i| i.to_string()).collect();
    meta.set("town.lights", lit.join(","));
    Dataset::new(videos, meta)
}
