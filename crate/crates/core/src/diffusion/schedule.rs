use crate::{Error, Result};

/// Per-step retention factors of the noising process and the fixed reverse
/// variances. Timesteps are 1-based; `alpha_bar(0)` is 1 by convention.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl NoiseSchedule {
    /// `beta_t` linear from `beta_start` (t = 1) to `beta_end` (t = T).
    pub fn linear(steps: usize, beta_start: f64, beta_end: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::invalid("schedule needs at least one step"));
        }
        if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
            return Err(Error::invalid(format!(
                "need 0 < beta_start <= beta_end < 1, got {beta_start}, {beta_end}"
            )));
        }
        let betas: Vec<f64> = (0..steps)
            .map(|i| {
                if steps == 1 {
                    beta_start
                } else {
                    beta_start + (beta_end - beta_start) * i as f64 / (steps - 1) as f64
                }
            })
            .collect();
        let alpha_bars = betas
            .iter()
            .scan(1.0, |acc, b| {
                *acc *= 1.0 - b;
                Some(*acc)
            })
            .collect();
        Ok(Self { betas, alpha_bars })
    }

    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    pub fn check(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.steps() {
            return Err(Error::TimestepOutOfRange { t, steps: self.steps() });
        }
        Ok(())
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        1.0 - self.betas[t - 1]
    }

    pub fn alpha_bar(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bars[t - 1]
        }
    }

    /// Reverse-transition standard deviation, `sqrt(beta_t)`.
    pub fn sigma(&self, t: usize) -> f64 {
        self.betas[t - 1].sqrt()
    }

    /// `count` timesteps evenly spaced over `1..=T`, ending at `T`.
    pub fn even_grid(&self, count: usize) -> Vec<usize> {
        let steps = self.steps();
        let count = count.clamp(1, steps);
        let mut grid: Vec<usize> = (1..=count)
            .map(|i| ((i * steps) as f64 / count as f64).round() as usize)
            .map(|t| t.clamp(1, steps))
            .collect();
        grid.dedup();
        grid
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thousand_step_linear_schedule_ends_near_zero() {
        let s = NoiseSchedule::linear(1000, 1e-4, 0.02).unwrap();
        // direct product: ln abar = sum ln(1 - beta_t) ~ -10.1
        let direct: f64 = (0..1000)
            .map(|i| 1.0 - (1e-4 + (0.02 - 1e-4) * i as f64 / 999.0))
            .product();
        assert!((s.alpha_bar(1000) - direct).abs() < 1e-15);
        assert!(s.alpha_bar(1000) < 1e-4);
    }

    #[test]
    fn single_step() {
        let s = NoiseSchedule::linear(1, 0.5, 0.5).unwrap();
        assert_eq!(s.alpha_bar(1), 0.5);
        assert_eq!(s.sigma(1), 0.5f64.sqrt());
    }

    #[test]
    fn rejects_bad_ranges() {
        assert!(NoiseSchedule::linear(0, 1e-4, 0.02).is_err());
        assert!(NoiseSchedule::linear(10, 0.0, 0.02).is_err());
        assert!(NoiseSchedule::linear(10, 0.03, 0.02).is_err());
        assert!(NoiseSchedule::linear(10, 1e-4, 1.0).is_err());
    }

    #[test]
    fn even_grid_matches_hundreds() {
        let s = NoiseSchedule::linear(1000, 1e-4, 0.02).unwrap();
        assert_eq!(s.even_grid(10), vec![100, 200, 300, 400, 500, 600, 700, 800, 900, 1000]);
    }

    proptest::proptest! {
        #[test]
        fn alpha_bar_strictly_decreasing(steps in 1usize..400, a in 1e-5f64..0.5, span in 0.0f64..0.49) {
            let b = (a + span).min(0.99);
            let s = NoiseSchedule::linear(steps, a, b).unwrap();
            for t in 1..=steps {
                proptest::prop_assert!(s.alpha(t) > 0.0 && s.alpha(t) < 1.0);
                proptest::prop_assert!(s.alpha_bar(t) < s.alpha_bar(t - 1));
            }
        }
    }
}
