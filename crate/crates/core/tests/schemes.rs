use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};

use fdm_core::diffusion::{NoisePredictor, NoiseSchedule};
use fdm_core::rng::{keyed, standard_normal};
use fdm_core::schemes::*;
use fdm_core::Result;
use ndarray::{Array2, ArrayView2};

const GRID: [(usize, usize, usize); 3] = [(30, 10, 7), (300, 36, 20), (1000, 36, 20)];

/// Returns zero noise, counts calls and fails on any non-finite observed value.
struct Probe {
    dim: usize,
    calls: AtomicUsize,
}

impl Probe {
    fn new(dim: usize) -> Self {
        Self {
            dim,
            calls: AtomicUsize::new(0),
        }
    }
}

impl NoisePredictor for Probe {
    fn frame_dim(&self) -> usize {
        self.dim
    }
    fn max_frames(&self) -> usize {
        20
    }
    fn predict(
        &self,
        x_t: ArrayView2<'_, f32>,
        y: ArrayView2<'_, f32>,
        _t: usize,
        _latent: &[usize],
        observed: &[usize],
    ) -> Result<Array2<f32>> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        assert!(
            y.iter().all(|v| v.is_finite()),
            "read an unsampled frame among {observed:?}"
        );
        Ok(Array2::zeros(x_t.raw_dim()))
    }
}

fn poisoned_video(n: usize, n_obs: usize, dim: usize) -> Array2<f32> {
    let mut v = standard_normal(&mut keyed(3, &[n as u64]), n, dim);
    v.rows_mut().into_iter().skip(n_obs).for_each(|mut r| r.fill(f32::NAN));
    v
}

#[test]
fn catalog_is_valid_over_grid() {
    for &(n, n_obs, k) in &GRID {
        for scheme in CatalogScheme::ALL {
            let s = scheme.build(n, n_obs, k).unwrap();
            assert_eq!(s.validate(), Ok(()), "{scheme} at ({n},{n_obs},{k})");
        }
    }
}

#[test]
fn autoreg_takes_seven_stages_on_small_video() {
    assert_eq!(make_autoreg(30, 10, 7).unwrap().stages.len(), 7);
}

#[test]
fn every_frame_is_sampled_exactly_once() {
    for &(n, n_obs, k) in &GRID {
        for scheme in CatalogScheme::ALL {
            let s = scheme.build(n, n_obs, k).unwrap();
            let mut seen = BTreeSet::new();
            for stage in &s.stages {
                for &i in &stage.latent {
                    assert!(i >= n_obs && seen.insert(i), "{scheme}: frame {i} repeated");
                }
            }
            assert_eq!(seen.len(), n - n_obs, "{scheme}");
        }
    }
}

#[test]
fn three_levels_use_more_stages_than_two() {
    let h2 = make_hierarchy(300, 36, 20, 2).unwrap();
    let h3 = make_hierarchy(300, 36, 20, 3).unwrap();
    assert!(h3.stages.len() > h2.stages.len());
}

#[test]
fn long_range_mixes_recent_and_distant_context() {
    let s = make_long_range(300, 36, 20).unwrap();
    for stage in &s.stages {
        let first = stage.latent[0];
        let recent: Vec<_> = stage.observed.iter().filter(|&&i| i + 5 >= first).collect();
        let far: Vec<_> = stage.observed.iter().filter(|&&i| i < 36).collect();
        assert_eq!(recent.len(), 5, "{stage:?}");
        assert!(far.len() >= 5, "{stage:?}");
    }
}

#[test]
fn json_round_trip_for_catalog() {
    for scheme in CatalogScheme::ALL {
        let s = scheme.build(30, 10, 7).unwrap();
        assert_eq!(SamplingScheme::from_json(&s.to_json()).unwrap(), s);
    }
}

#[test]
fn executor_calls_model_once_per_step_per_stage() {
    let sched = NoiseSchedule::linear(7, 1e-4, 0.02).unwrap();
    for scheme in [CatalogScheme::Autoreg, CatalogScheme::Hierarchy3] {
        let s = scheme.build(30, 10, 7).unwrap();
        let probe = Probe::new(2);
        let video = poisoned_video(30, 10, 2);
        let out = sample_video(&probe, &sched, &video, &s, false, &mut keyed(1, &[])).unwrap();
        assert_eq!(probe.calls.load(Ordering::Relaxed), 7 * s.stages.len());
        assert!(out.iter().all(|v| v.is_finite()));
    }
}

#[test]
fn only_available_frames_are_read() {
    let sched = NoiseSchedule::linear(3, 1e-4, 0.02).unwrap();
    for scheme in CatalogScheme::ALL {
        let s = scheme.build(300, 36, 20).unwrap();
        let video = poisoned_video(300, 36, 3);
        let mut executed: Vec<Stage> = Vec::new();
        let probe = Probe::new(3);
        sample_video_with(
            &probe,
            &sched,
            &video,
            &s,
            scheme.is_adaptive(),
            &mut keyed(2, &[]),
            &mut executed,
        )
        .unwrap();
        let resolved = SamplingScheme {
            stages: executed,
            ..s.clone()
        };
        assert_eq!(resolved.validate(), Ok(()), "{scheme} as executed");
    }
}

#[test]
fn prefix_is_unchanged_and_seeds_repeat() {
    let sched = NoiseSchedule::linear(5, 1e-4, 0.02).unwrap();
    let s = make_hierarchy(30, 10, 7, 2).unwrap();
    let video = poisoned_video(30, 10, 2);
    let probe = Probe::new(2);
    let a = sample_video(&probe, &sched, &video, &s, false, &mut keyed(9, &[])).unwrap();
    let b = sample_video(&probe, &sched, &video, &s, false, &mut keyed(9, &[])).unwrap();
    let c = sample_video(&probe, &sched, &video, &s, false, &mut keyed(10, &[])).unwrap();
    for i in 0..10 {
        for j in 0..2 {
            assert_eq!(a[[i, j]].to_bits(), video[[i, j]].to_bits());
        }
    }
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn fully_observed_video_is_returned_unchanged() {
    let sched = NoiseSchedule::linear(5, 1e-4, 0.02).unwrap();
    let video = standard_normal(&mut keyed(4, &[]), 12, 2);
    let s = SamplingScheme {
        n: 12,
        k: 4,
        n_obs: 12,
        stages: vec![],
    };
    let probe = Probe::new(2);
    let out = sample_video(&probe, &sched, &video, &s, false, &mut keyed(0, &[])).unwrap();
    assert_eq!(out, video);
    assert_eq!(probe.calls.load(Ordering::Relaxed), 0);
}

#[test]
fn executor_rejects_invalid_inputs() {
    let sched = NoiseSchedule::linear(5, 1e-4, 0.02).unwrap();
    let probe = Probe::new(2);
    let video = standard_normal(&mut keyed(4, &[]), 30, 2);
    let mut bad = make_autoreg(30, 10, 7).unwrap();
    bad.stages[1].observed.push(29);
    assert!(sample_video(&probe, &sched, &video, &bad, false, &mut keyed(0, &[])).is_err());
    let wide = make_autoreg(30, 10, 21).unwrap();
    assert!(sample_video(&probe, &sched, &video, &wide, false, &mut keyed(0, &[])).is_err());
    let short = standard_normal(&mut keyed(4, &[]), 29, 2);
    let ok = make_autoreg(30, 10, 7).unwrap();
    assert!(sample_video(&probe, &sched, &short, &ok, false, &mut keyed(0, &[])).is_err());
}

fn min_pair(frames: &Array2<f32>, set: &[usize]) -> f64 {
    let mut best = f64::INFINITY;
    for (a, &i) in set.iter().enumerate() {
        for &j in &set[a + 1..] {
            let d: f64 = frames
                .row(i)
                .iter()
                .zip(frames.row(j).iter())
                .map(|(&x, &y)| ((x - y) as f64).powi(2))
                .sum::<f64>()
                .sqrt();
            best = best.min(d);
        }
    }
    best
}

/// Greedy max-min by brute force: at each step try every candidate and keep
/// the one maximising the smallest distance to the chosen set.
fn greedy_oracle(frames: &Array2<f32>, candidates: &[usize], forced: &[usize], budget: usize) -> Vec<usize> {
    let mut chosen = forced.to_vec();
    while chosen.len() < budget {
        let mut best: Option<(f64, usize)> = None;
        for &c in candidates.iter().filter(|c| !chosen.contains(c)) {
            let score = chosen
                .iter()
                .map(|&s| min_pair(frames, &[s, c]))
                .fold(f64::INFINITY, f64::min);
            if best.is_none_or(|(b, _)| score > b) {
                best = Some((score, c));
            }
        }
        match best {
            Some((_, c)) => chosen.push(c),
            None => break,
        }
    }
    chosen.sort_unstable();
    chosen
}

#[test]
fn adaptive_matches_greedy_oracle() {
    for seed in 0..50 {
        let frames = standard_normal(&mut keyed(seed, &[7]), 8, 3);
        let available = [0, 1, 2, 3, 4, 5];
        let latent = [6, 7];
        let forced = forced_context(&available, &latent, 3);
        assert_eq!(forced, vec![5]);
        let got = adaptive_select(&available, frames.view(), &latent, 3, &forced).unwrap();
        assert_eq!(got, greedy_oracle(&frames, &available, &forced, 3), "seed {seed}");
    }
}
