//! Log-log power-law fits of energies against λ and the crossover λ_c where
//! the weak- and strong-coupling lines meet.
//!
//! Logarithms are natural.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("fit needs at least 2 distinct λ values, got {0}")]
    TooFewPoints(usize),
    #[error("fit needs positive λ and E, got ({lambda}, {energy})")]
    NonPositive { lambda: f64, energy: f64 },
    #[error("fits have equal slopes; lines do not intersect")]
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    LowLambda,
    HighLambda,
    Quartic,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::LowLambda => "low_lambda",
            Region::HighLambda => "high_lambda",
            Region::Quartic => "quartic",
        })
    }
}

/// `ln E = a ln λ + b`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub a: f64,
    pub b: f64,
    pub region: Region,
    pub n: usize,
    /// Sum of squared residuals in log-log space.
    pub residual: f64,
    pub points: usize,
}

impl FitResult {
    pub fn log_energy(&self, log_lambda: f64) -> f64 {
        self.a * log_lambda + self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub n: usize,
    pub lambda_c: f64,
    pub e_c: f64,
}

/// Ordinary least squares on `(ln λ, ln E)`.
pub fn fit_region(points: &[(f64, f64)], region: Region, n: usize) -> Result<FitResult, FitError> {
    for &(lambda, energy) in points {
        if !(lambda > 0.0 && energy > 0.0) {
            return Err(FitError::NonPositive { lambda, energy });
        }
    }
    // Sorting makes the summation order, and so the result, independent of
    // the input order.
    let mut logs: Vec<(f64, f64)> = points.iter().map(|&(l, e)| (l.ln(), e.ln())).collect();
    logs.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
    let m = logs.len();
    let distinct = logs.windows(2).filter(|w| w[0].0 != w[1].0).count() + usize::from(m > 0);
    if distinct < 2 {
        return Err(FitError::TooFewPoints(distinct));
    }
    let mf = m as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / mf;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / mf;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let residual = logs.iter().map(|p| (p.1 - a * p.0 - b).powi(2)).sum();
    Ok(FitResult {
        a,
        b,
        region,
        n,
        residual,
        points: m,
    })
}

/// Intersection of two fit lines.
pub fn critical_lambda(first: &FitResult, second: &FitResult) -> Result<CriticalPoint, FitError> {
    let da = first.a - second.a;
    if da.abs() < 1e-14 {
        return Err(FitError::Parallel);
    }
    let log_lambda = (second.b - first.b) / da;
    let log_e = 0.5 * (first.log_energy(log_lambda) + second.log_energy(log_lambda));
    Ok(CriticalPoint {
        n: first.n,
        lambda_c: log_lambda.exp(),
        e_c: log_e.exp(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionCutoffs {
    /// Points with λ below this form the low-λ region.
    pub low_max: f64,
    /// Points with λ above this form the high-λ region.
    pub high_min: f64,
}

impl Default for RegionCutoffs {
    fn default() -> Self {
        Self {
            low_max: 0.1,
            high_min: 2.0,
        }
    }
}

/// `λ = 0.005 · 2^k` for `k = 0..=12`.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..=12).map(|k| 0.005 * f64::from(1u32 << k)).collect()
}

/// Which spectrum an energy belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Anharmonic,
    Quartic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub n: usize,
    pub lambda: f64,
    pub energy: f64,
    pub family: Family,
    /// Where the energy came from, e.g. `oracle` or `pinn`.
    pub source: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScalingAnalysis {
    pub fits: Vec<FitResult>,
    pub critical: Vec<CriticalPoint>,
}

/// Low- and high-λ fits of the anharmonic family, a full-range fit of the
/// quartic family, and the low/high intersection, for every `n` present.
pub fn analyze(samples: &[EnergySample], cutoffs: RegionCutoffs) -> Result<ScalingAnalysis, FitError> {
    let mut ns: Vec<usize> = samples.iter().map(|s| s.n).collect();
    ns.sort_unstable();
    ns.dedup();
    let mut out = ScalingAnalysis::default();
    for n in ns {
        let pick = |family: Family, keep: &dyn Fn(f64) -> bool| -> Vec<(f64, f64)> {
            samples
                .iter()
                .filter(|s| s.n == n && s.family == family && keep(s.lambda))
                .map(|s| (s.lambda, s.energy))
                .collect()
        };
        let low = pick(Family::Anharmonic, &|l| l < cutoffs.low_max);
        let high = pick(Family::Anharmonic, &|l| l > cutoffs.high_min);
        let quartic = pick(Family::Quartic, &|_| true);
        let low_fit = (!low.is_empty()).then(|| fit_region(&low, Region::LowLambda, n)).transpose()?;
        let high_fit = (!high.is_empty()).then(|| fit_region(&high, Region::HighLambda, n)).transpose()?;
        if !quartic.is_empty() {
            out.fits.push(fit_region(&quartic, Region::Quartic, n)?);
        }
        if let (Some(lo), Some(hi)) = (low_fit, high_fit) {
            out.critical.push(critical_lambda(&lo, &hi)?);
        }
        out.fits.extend(low_fit);
        out.fits.extend(high_fit);
    }
    out.fits.sort_by_key(|f| (f.n, f.region as u8));
    Ok(out)
}
