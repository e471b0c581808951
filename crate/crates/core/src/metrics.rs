//! Signed relative energy error and resampled fidelity.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::losses::ArchivedState;
use crate::networks::{ModelPair, NetworkError};
use crate::oracle::{HarmonicState, OracleSolution};
use crate::sampling::{BatchSampler, BatchSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("wavefunction has zero norm on the evaluation grid")]
    ZeroNorm,
    #[error("reference energy is zero")]
    ZeroReference,
    #[error("network evaluation failed: {0}")]
    Network(#[from] NetworkError),
}

/// `(E_ref − E_pinn) / E_ref`; positive when the network underestimates.
pub fn energy_error(e_ref: f64, e_pinn: f64) -> Result<f64, MetricsError> {
    if e_ref == 0.0 {
        return Err(MetricsError::ZeroReference);
    }
    Ok((e_ref - e_pinn) / e_ref)
}

/// Anything that can be sampled at arbitrary points.
pub trait Wavefunction {
    fn values(&self, xs: &[f64]) -> Result<Vec<f64>, MetricsError>;
}

impl Wavefunction for HarmonicState {
    fn values(&self, xs: &[f64]) -> Result<Vec<f64>, MetricsError> {
        Ok(xs.iter().map(|&x| self.eval(x)).collect())
    }
}

impl Wavefunction for ArchivedState {
    fn values(&self, xs: &[f64]) -> Result<Vec<f64>, MetricsError> {
        Ok(xs.iter().map(|&x| self.eval(x)).collect())
    }
}

impl Wavefunction for ModelPair {
    fn values(&self, xs: &[f64]) -> Result<Vec<f64>, MetricsError> {
        Ok(self.psi_values(xs)?)
    }
}

/// State `k` of an oracle solution.
pub struct OracleState<'a> {
    pub solution: &'a OracleSolution,
    pub k: usize,
}

impl Wavefunction for OracleState<'_> {
    fn values(&self, xs: &[f64]) -> Result<Vec<f64>, MetricsError> {
        Ok(xs.iter().map(|&x| self.solution.eval(self.k, x)).collect())
    }
}

/// Adapter for closures.
pub struct FnWavefunction<F>(pub F);

impl<F: Fn(f64) -> f64> Wavefunction for FnWavefunction<F> {
    fn values(&self, xs: &[f64]) -> Result<Vec<f64>, MetricsError> {
        Ok(xs.iter().map(|&x| (self.0)(x)).collect())
    }
}

/// `|Σ â_i b̂_i|²` of the two vectors after normalizing each.
pub fn discrete_fidelity(a: &[f64], b: &[f64]) -> Result<f64, MetricsError> {
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 || !na.is_finite() || !nb.is_finite() {
        return Err(MetricsError::ZeroNorm);
    }
    let overlap = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb);
    Ok(overlap * overlap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub mean: f64,
    /// Population standard deviation over resamples.
    pub std: f64,
    pub resamples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityConfig {
    pub points: usize,
    pub resamples: usize,
    pub seed: u64,
}

impl Default for FidelityConfig {
    fn default() -> Self {
        Self {
            points: 512,
            resamples: 1000,
            seed: 0,
        }
    }
}

/// Fidelity averaged over jittered evaluation grids spanning
/// `[-half_width, half_width]`, drawn like training batches.
pub fn fidelity(
    reference: &dyn Wavefunction,
    candidate: &dyn Wavefunction,
    half_width: f64,
    cfg: FidelityConfig,
) -> Result<FidelityReport, MetricsError> {
    let mut sampler = BatchSampler::new(
        BatchSpec {
            count: cfg.points,
            ..BatchSpec::new(half_width)
        },
        cfg.seed,
    );
    let samples = (0..cfg.resamples.max(1))
        .map(|_| {
            let xs = sampler.sample();
            discrete_fidelity(&reference.values(&xs)?, &candidate.values(&xs)?)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let count = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / count;
    let var = samples.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / count;
    Ok(FidelityReport {
        mean,
        std: var.sqrt(),
        resamples: samples.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn energy_error_cases() {
        assert_eq!(energy_error(0.5, 0.5).unwrap(), 0.0);
        assert!((energy_error(0.5, 0.499_812).unwrap() - 3.76e-4).abs() < 1e-12);
        assert!((energy_error(1.0, 1.1).unwrap() + 0.1).abs() < 1e-12);
        assert_eq!(energy_error(0.0, 1.0), Err(MetricsError::ZeroReference));
    }

    fn cfg() -> FidelityConfig {
        FidelityConfig { points: 256, resamples: 50, seed: 3 }
    }

    #[test]
    fn identical_and_opposite_parity() {
        let g0 = HarmonicState::new(0, 1.0);
        let g1 = HarmonicState::new(1, 1.0);
        let same = fidelity(&g0, &g0, 3.5, cfg()).unwrap();
        assert!((same.mean - 1.0).abs() < 1e-12 && same.std < 1e-12);
        assert_eq!(same.resamples, 50);
        // Jittered grids are not exactly symmetric, so the overlap is small
        // rather than zero.
        let cross = fidelity(&g0, &g1, 3.5, cfg()).unwrap();
        assert!(cross.mean < 1e-3, "{}", cross.mean);
    }

    #[test]
    fn zero_vector_is_an_error() {
        let zero = FnWavefunction(|_| 0.0);
        let g0 = HarmonicState::new(0, 1.0);
        assert_eq!(fidelity(&g0, &zero, 3.5, cfg()), Err(MetricsError::ZeroNorm));
    }

    proptest! {
        #[test]
        fn fidelity_is_symmetric_and_scale_invariant(c in prop_oneof![-50.0f64..-0.01, 0.01f64..50.0], shift in -0.5f64..0.5) {
            let a = HarmonicState::new(0, 1.0);
            let b = FnWavefunction(move |x: f64| (-(x - shift).powi(2) / 2.0).exp() + 0.1 * x);
            let scaled = FnWavefunction(move |x: f64| c * a.eval(x));
            let ab = fidelity(&a, &b, 4.0, cfg()).unwrap();
            let ba = fidelity(&b, &a, 4.0, cfg()).unwrap();
            prop_assert!((ab.mean - ba.mean).abs() < 1e-14);
            let self_scaled = fidelity(&a, &scaled, 4.0, cfg()).unwrap();
            prop_assert!((self_scaled.mean - 1.0).abs() < 1e-12);
            let flipped = FnWavefunction(move |x: f64| -((-(x - shift).powi(2) / 2.0).exp() + 0.1 * x));
            let af = fidelity(&a, &flipped, 4.0, cfg()).unwrap();
            prop_assert!((af.mean - ab.mean).abs() < 1e-14);
            prop_assert!(ab.mean <= 1.0 + 1e-9 && ab.std >= 0.0);
        }
    }
}
