//! Collocation batches and training-domain sizes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Margin added on each side of the anharmonic domain.
pub const DOMAIN_MARGIN: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchSpec {
    pub count: usize,
    pub half_width: f64,
    /// Jitter half-interval as a fraction of the grid spacing, in `[0, 0.5]`.
    pub jitter_fraction: f64,
}

impl BatchSpec {
    pub fn new(half_width: f64) -> Self {
        Self {
            count: 512,
            half_width,
            jitter_fraction: 0.5,
        }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.count - 1) as f64
    }
}

/// A stream of jittered-grid batches with its own RNG state.
#[derive(Debug, Clone)]
pub struct BatchSampler {
    spec: BatchSpec,
    rng: ChaCha8Rng,
}

impl BatchSampler {
    pub fn new(spec: BatchSpec, seed: u64) -> Self {
        assert!(spec.count >= 2, "a batch needs at least two points");
        assert!(
            (0.0..=0.5).contains(&spec.jitter_fraction),
            "jitter fraction must lie in [0, 0.5]"
        );
        assert!(spec.half_width > 0.0, "half width must be positive");
        Self {
            spec,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn spec(&self) -> &BatchSpec {
        &self.spec
    }

    /// Draws the next batch: each node of a uniform grid over
    /// `[-half_width, half_width]` is moved uniformly within
    /// `±jitter_fraction · spacing`. Nodes pushed past an end are reflected
    /// back inside. The result is sorted ascending.
    pub fn sample(&mut self) -> Vec<f64> {
        let BatchSpec {
            count,
            half_width: h,
            jitter_fraction,
        } = self.spec;
        let dx = self.spec.spacing();
        let amp = jitter_fraction * dx;
        let mut xs: Vec<f64> = (0..count)
            .map(|i| {
                let node = -h + i as f64 * dx;
                let mut x = if amp > 0.0 {
                    node + self.rng.gen_range(-amp..=amp)
                } else {
                    node
                };
                if x > h {
                    x = 2.0 * h - x;
                } else if x < -h {
                    x = -2.0 * h - x;
                }
                x.clamp(-h, h)
            })
            .collect();
        xs.sort_by(f64::total_cmp);
        xs
    }
}

/// `L(n) = 7 + 2n`, the full width of the harmonic training domain.
pub fn harmonic_domain(n: usize) -> f64 {
    7.0 + 2.0 * n as f64
}

/// Full width of the anharmonic training domain before the harmonic cap.
///
/// Solves `λ y⁴ + ω y² = ω (L/2)²` for `y` and returns `2 (y + 1)`.
pub fn anharmonic_domain_raw(n: usize, lambda: f64, omega: f64) -> f64 {
    let half = harmonic_domain(n) / 2.0;
    let ratio = lambda / omega;
    let y_sq = (-1.0 + (1.0 + 4.0 * ratio * half * half).sqrt()) / (2.0 * ratio);
    2.0 * (y_sq.sqrt() + DOMAIN_MARGIN)
}

/// Anharmonic training domain, capped at the harmonic width `L(n)`.
///
/// Falls back to [`harmonic_domain`] for `lambda <= 0`.
pub fn anharmonic_domain(n: usize, lambda: f64, omega: f64) -> f64 {
    let harmonic = harmonic_domain(n);
    if lambda <= 0.0 {
        return harmonic;
    }
    anharmonic_domain_raw(n, lambda, omega).min(harmonic)
}

/// Training domain width for the potential `½ω²x² + λx⁴`.
///
/// Double wells (`ω² < 0`) use `|ω|`; the pure quartic (`ω² = 0`) uses
/// `ω = 1`, the frequency of the anharmonic run it is seeded from.
pub fn domain_for(n: usize, omega_sq: f64, lambda: f64) -> f64 {
    let omega = if omega_sq == 0.0 { 1.0 } else { omega_sq.abs().sqrt() };
    anharmonic_domain(n, lambda, omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn harmonic_widths() {
        assert_eq!(harmonic_domain(0), 7.0);
        assert_eq!(harmonic_domain(2), 11.0);
        assert_eq!(harmonic_domain(5), 17.0);
        for n in 0..10 {
            assert_eq!(harmonic_domain(n + 1) - harmonic_domain(n), 2.0);
        }
    }

    #[test]
    fn anharmonic_widths() {
        // Direct evaluation: y² = (-1 + sqrt(1 + 4·0.005·12.25)) / 0.01.
        let raw = anharmonic_domain_raw(0, 0.005, 1.0);
        assert!((raw - 8.805_752_867_128_515).abs() < 1e-12, "{raw}");
        assert_eq!(anharmonic_domain(0, 0.005, 1.0), 7.0);

        let a = anharmonic_domain(0, 10.24, 1.0);
        assert!((a - 4.045_493_823_994_293).abs() < 1e-12, "{a}");

        assert_eq!(anharmonic_domain(3, 1e-12, 1.0), harmonic_domain(3));
        assert_eq!(anharmonic_domain(3, 0.0, 1.0), harmonic_domain(3));
        assert_eq!(anharmonic_domain(3, -1.0, 1.0), harmonic_domain(3));
    }

    #[test]
    fn zero_jitter_is_the_uniform_grid() {
        let spec = BatchSpec {
            count: 5,
            half_width: 2.0,
            jitter_fraction: 0.0,
        };
        let xs = BatchSampler::new(spec, 0).sample();
        assert_eq!(xs, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn stream_advances() {
        let mut s = BatchSampler::new(BatchSpec::new(3.5), 42);
        assert_ne!(s.sample(), s.sample());
        let mut t = BatchSampler::new(BatchSpec::new(3.5), 42);
        let mut u = BatchSampler::new(BatchSpec::new(3.5), 42);
        assert_eq!(t.sample(), u.sample());
    }

    #[test]
    fn ten_thousand_draws_stay_in_domain() {
        let spec = BatchSpec::new(4.5);
        let mut s = BatchSampler::new(spec, 1);
        let dx = spec.spacing();
        for _ in 0..10_000 {
            let xs = s.sample();
            assert_eq!(xs.len(), 512);
            assert!(xs.iter().all(|x| x.abs() <= 4.5));
            for (i, &x) in xs.iter().enumerate() {
                let node = -4.5 + i as f64 * dx;
                assert!((x - node).abs() <= 0.5 * dx + 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn anharmonic_width_solves_matching_condition(n in 0usize..8, lambda in 1e-3f64..50.0, omega in 0.3f64..4.0) {
            let y = anharmonic_domain_raw(n, lambda, omega) / 2.0 - DOMAIN_MARGIN;
            let half = harmonic_domain(n) / 2.0;
            let lhs = lambda * y.powi(4) + omega * y * y;
            let rhs = omega * half * half;
            prop_assert!(((lhs - rhs) / rhs).abs() <= 1e-10);
        }

        #[test]
        fn batches_are_sorted(seed in 0u64..1000, count in 2usize..600, hw in 0.5f64..10.0, jf in 0.0f64..=0.5) {
            let mut s = BatchSampler::new(BatchSpec { count, half_width: hw, jitter_fraction: jf }, seed);
            let xs = s.sample();
            prop_assert!(xs.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(xs.iter().all(|x| x.abs() <= hw));
        }
    }
}
