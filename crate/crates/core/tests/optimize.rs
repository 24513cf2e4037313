use fdm_core::optimize::{optimize_observed, trace_csv, StageLoss};
use fdm_core::Result;
use proptest::prelude::*;

/// Quadratic in the observed indices, with a per-stage preferred frame so
/// the greedy choice is not just the nearest neighbour.
struct Quadratic {
    prefer: Vec<f64>,
}

impl StageLoss for Quadratic {
    fn stage_loss(&self, latent: &[usize], observed: &[usize], stage: usize, _step: usize) -> Result<f64> {
        let centre = latent.iter().sum::<usize>() as f64 / latent.len() as f64;
        Ok(observed
            .iter()
            .map(|&y| {
                let y = y as f64;
                0.1 * (y - centre).powi(2) - (y - self.prefer[stage]).powi(2).min(4.0)
            })
            .sum())
    }
}

/// Greedy by exhaustive enumeration: at every step evaluates every index
/// in `0..n`, skipping anything not yet available, latent or chosen.
fn oracle(loss: &Quadratic, n: usize, n_obs: usize, stages: &[Vec<usize>], target: usize) -> Vec<Vec<usize>> {
    let mut available = vec![false; n];
    available[..n_obs].iter_mut().for_each(|a| *a = true);
    let mut out = Vec::new();
    for (s, x) in stages.iter().enumerate() {
        let lo = *x.iter().min().unwrap();
        let hi = *x.iter().max().unwrap();
        let mut y: Vec<usize> = Vec::new();
        if let Some(b) = (0..lo).rev().find(|&i| available[i]) {
            y.push(b);
        }
        y.extend((lo + 1..hi).filter(|&i| available[i] && !x.contains(&i)));
        if let Some(a) = (hi + 1..n).find(|&i| available[i]) {
            y.push(a);
        }
        assert!(y.len() <= target);
        let mut step = 0;
        while y.len() < target {
            let mut best: Option<(f64, usize)> = None;
            for i in 0..n {
                if !available[i] || x.contains(&i) || y.contains(&i) {
                    continue;
                }
                let mut cand = y.clone();
                cand.push(i);
                cand.sort_unstable();
                let l = loss.stage_loss(x, &cand, s, step).unwrap();
                if best.is_none_or(|(b, _)| l < b) {
                    best = Some((l, i));
                }
            }
            y.push(best.unwrap().1);
            step += 1;
        }
        y.sort_unstable();
        for &i in x {
            available[i] = true;
        }
        out.push(y);
    }
    out
}

#[test]
fn matches_exhaustive_greedy_on_small_instance() {
    let stages = vec![vec![8, 11], vec![9, 10]];
    for (a, b) in [(0.0, 0.0), (2.0, 5.0), (7.0, 11.0), (3.5, 1.0)] {
        let loss = Quadratic { prefer: vec![a, b] };
        let (scheme, _) = optimize_observed(&loss, 12, 8, 4, &stages, 2).unwrap();
        let got: Vec<_> = scheme.stages.iter().map(|s| s.observed.clone()).collect();
        assert_eq!(got, oracle(&loss, 12, 8, &stages, 2), "prefer ({a}, {b})");
        assert_eq!(scheme.validate(), Ok(()));
    }
}

#[test]
fn csv_header_and_rows() {
    let loss = Quadratic { prefer: vec![2.0, 2.0] };
    let (_, trace) = optimize_observed(&loss, 12, 8, 4, &[vec![8, 9], vec![10, 11]], 2).unwrap();
    let csv = trace_csv(&trace);
    assert!(csv.starts_with("stage,step,candidate,loss,chosen\n"));
    assert_eq!(csv.lines().count(), trace.len() + 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn greedy_trace_is_monotone_and_causal(
        prefer in proptest::collection::vec(0.0f64..20.0, 3),
        n_obs in 3usize..8,
    ) {
        let n = 14;
        let rest: Vec<usize> = (n_obs..n).collect();
        let third = rest.len().div_ceil(3);
        let stages: Vec<Vec<usize>> = rest.chunks(third).map(|c| c.to_vec()).collect();
        let loss = Quadratic { prefer: prefer.clone() };
        let k = third + 3;
        let (scheme, trace) = optimize_observed(&loss, n, n_obs, k, &stages, 3).unwrap();
        prop_assert_eq!(scheme.validate(), Ok(()));
        for (s, st) in scheme.stages.iter().enumerate() {
            prop_assert_eq!(&st.latent, &stages[s]);
        }
        let mut sampled: Vec<usize> = (0..n_obs).collect();
        for (s, st) in stages.iter().enumerate() {
            let rows: Vec<_> = trace.iter().filter(|r| r.stage == s).collect();
            for r in &rows {
                prop_assert!(sampled.contains(&r.candidate), "stage {} evaluated unsampled {}", s, r.candidate);
            }
            let steps = rows.iter().map(|r| r.step).max().map_or(0, |m| m + 1);
            for step in 0..steps {
                let at: Vec<_> = rows.iter().filter(|r| r.step == step).collect();
                let chosen: Vec<_> = at.iter().filter(|r| r.chosen).collect();
                prop_assert_eq!(chosen.len(), 1);
                for r in &at {
                    prop_assert!(chosen[0].loss <= r.loss);
                }
            }
            sampled.extend(st);
        }
        let again = optimize_observed(&loss, n, n_obs, k, &stages, 3).unwrap();
        prop_assert_eq!(again.0, scheme);
    }
}

mod stage_loss {
    use fdm_core::denoiser::{Denoiser, DenoiserConfig};
    use fdm_core::diffusion::{NoisePredictor, NoiseSchedule};
    use fdm_core::optimize::{estimate_stage_loss, stage_noise};
    use fdm_core::rng::{keyed, standard_normal};
    use ndarray::Array2;

    #[test]
    fn matches_straight_line_recomputation() {
        let cfg = DenoiserConfig::new(2, 8, 1, 2, 6, 30, 20).unwrap();
        let model = Denoiser::init(cfg, 2).unwrap();
        let sched = NoiseSchedule::linear(30, 1e-4, 0.02).unwrap();
        let videos: Vec<Array2<f32>> = (0..3).map(|v| standard_normal(&mut keyed(v, &[1]), 20, 2)).collect();
        let (latent, observed, grid) = ([12usize, 14], [3usize, 11, 15], [1usize, 10, 30]);
        let got = estimate_stage_loss(&model, &sched, &latent, &observed, &videos, &grid, 77, (1, 2)).unwrap();

        let mut sum = 0.0f64;
        for (v, video) in videos.iter().enumerate() {
            for &t in &grid {
                let eps = stage_noise(77, (1, 2), v, t, 2, 2);
                let ab = sched.alpha_bar(t);
                let mut x_t = Array2::<f32>::zeros((2, 2));
                let mut y = Array2::<f32>::zeros((3, 2));
                for r in 0..2 {
                    for c in 0..2 {
                        x_t[[r, c]] = ab.sqrt() as f32 * video[[latent[r], c]] + (1.0 - ab).sqrt() as f32 * eps[[r, c]];
                    }
                }
                for r in 0..3 {
                    for c in 0..2 {
                        y[[r, c]] = video[[observed[r], c]];
                    }
                }
                let pred = model.predict(x_t.view(), y.view(), t, &latent, &observed).unwrap();
                let mut call = 0.0f64;
                for r in 0..2 {
                    for c in 0..2 {
                        call += ((eps[[r, c]] - pred[[r, c]]) as f64).powi(2);
                    }
                }
                sum += call;
            }
        }
        assert_eq!(got, sum / 9.0);
        let other = estimate_stage_loss(&model, &sched, &latent, &observed, &videos, &grid, 77, (1, 3)).unwrap();
        assert_ne!(got, other);
    }
}
