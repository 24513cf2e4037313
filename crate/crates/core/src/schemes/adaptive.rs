use ndarray::ArrayView2;

use crate::{Error, Result};

fn distance_to_latents(i: usize, latent: &[usize]) -> usize {
    latent.iter().map(|&x| x.abs_diff(i)).min().unwrap_or(usize::MAX)
}

/// Orders by distance to the nearest latent, then by index.
fn by_proximity(mut idx: Vec<usize>, latent: &[usize]) -> Vec<usize> {
    idx.sort_by_key(|&i| (distance_to_latents(i, latent), i));
    idx
}

/// The available frames a stage must condition on: the closest one before
/// its first latent, the closest one after its last, and every available
/// frame in between. Over `budget`, the ones nearest a latent are kept.
/// `available` must be sorted.
pub fn forced_context(available: &[usize], latent: &[usize], budget: usize) -> Vec<usize> {
    let (Some(&lo), Some(&hi)) = (latent.iter().min(), latent.iter().max()) else {
        return vec![];
    };
    let mut forced = Vec::new();
    if let Some(&b) = available.iter().rev().find(|&&a| a < lo) {
        forced.push(b);
    }
    forced.extend(
        available
            .iter()
            .copied()
            .filter(|&a| a > lo && a < hi && !latent.contains(&a)),
    );
    if let Some(&a) = available.iter().find(|&&a| a > hi) {
        forced.push(a);
    }
    let mut forced = by_proximity(forced, latent);
    forced.truncate(budget);
    forced.sort_unstable();
    forced
}

/// Forced context topped up to `budget` with the remaining available frames
/// closest to any latent (ties to the earlier frame). Sorted output.
pub fn nearest_context(available: &[usize], latent: &[usize], budget: usize) -> Vec<usize> {
    let mut chosen = forced_context(available, latent, budget);
    let rest: Vec<usize> = available
        .iter()
        .copied()
        .filter(|a| !chosen.contains(a) && !latent.contains(a))
        .collect();
    for i in by_proximity(rest, latent) {
        if chosen.len() >= budget {
            break;
        }
        chosen.push(i);
    }
    chosen.sort_unstable();
    chosen
}

fn frame_distance(frames: &ArrayView2<'_, f32>, a: usize, b: usize) -> f64 {
    frames
        .row(a)
        .iter()
        .zip(frames.row(b).iter())
        .map(|(&x, &y)| ((x - y) as f64).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Starts from `forced` and greedily adds the available frame whose
/// Euclidean distance to its nearest already-chosen frame is largest (ties
/// to the smaller index) until `budget` frames are chosen or none remain.
/// `frames` holds current values for every index of the video.
pub fn adaptive_select(
    available: &[usize],
    frames: ArrayView2<'_, f32>,
    latent: &[usize],
    budget: usize,
    forced: &[usize],
) -> Result<Vec<usize>> {
    if available.is_empty() && budget > 0 {
        return Err(Error::invalid("no available frames to condition on"));
    }
    if forced.len() > budget {
        return Err(Error::OverBudget {
            frames: forced.len(),
            k: budget,
        });
    }
    if let Some(&f) = forced.iter().find(|f| !available.contains(f)) {
        return Err(Error::invalid(format!("forced frame {f} is not available")));
    }
    for &i in available {
        if i >= frames.nrows() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: frames.nrows(),
            });
        }
    }
    let mut chosen = forced.to_vec();
    let mut candidates: Vec<usize> = available
        .iter()
        .copied()
        .filter(|a| !chosen.contains(a) && !latent.contains(a))
        .collect();
    candidates.sort_unstable();
    // nearest[c] = distance from candidate c to its closest chosen frame
    let mut nearest: Vec<f64> = candidates
        .iter()
        .map(|&c| {
            chosen
                .iter()
                .map(|&s| frame_distance(&frames, c, s))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    while chosen.len() < budget && !candidates.is_empty() {
        let mut best = 0;
        for i in 1..candidates.len() {
            if nearest[i] > nearest[best] {
                best = i;
            }
        }
        let pick = candidates.remove(best);
        nearest.remove(best);
        for (c, d) in candidates.iter().zip(nearest.iter_mut()) {
            *d = d.min(frame_distance(&frames, *c, pick));
        }
        chosen.push(pick);
    }
    chosen.sort_unstable();
    Ok(chosen)
}
