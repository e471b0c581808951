//! The seven training losses and their scheduled weights.
//!
//! Metrics differ per loss: the normalization and boundary constraints use
//! the sum of absolute errors, the integral, equation, orthogonality and
//! symmetry losses use mean squared errors, and the energy term is the
//! exponential `exp(a (E - E_init))`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::networks::{EvalBundle, ModelPair, NetworkError};
use crate::sampling::domain_for;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("symmetry sign {s} does not match quantum number {n}")]
    Parity { n: usize, s: i32 },
    #[error("half width must be positive, got {0}")]
    HalfWidth(f64),
    #[error("lambda must be non-negative, got {0}")]
    Lambda(f64),
    #[error("potential vanishes: omega_sq and lambda are both zero")]
    FreeParticle,
    #[error("energy-loss steepness must be positive, got {0}")]
    Steepness(f64),
}

/// The physical problem solved by one training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    /// ω²; negative values give a double well.
    pub omega_sq: f64,
    pub lambda: f64,
    /// Quantum number of the state being trained.
    pub n: usize,
    /// Symmetry sign: +1 for even `n`, -1 for odd.
    pub s: i32,
    /// Half of the training-domain width.
    pub half_width: f64,
    pub e_init: f64,
    /// Steepness of the energy-minimization loss.
    pub a: f64,
}

pub const DEFAULT_STEEPNESS: f64 = 0.8;

pub fn parity_sign(n: usize) -> i32 {
    if n % 2 == 0 {
        1
    } else {
        -1
    }
}

impl ProblemSpec {
    /// Potential `½ω²x² + λx⁴` with the default domain for state `n`.
    pub fn new(omega_sq: f64, lambda: f64, n: usize) -> Self {
        Self {
            omega_sq,
            lambda,
            n,
            s: parity_sign(n),
            half_width: domain_for(n, omega_sq, lambda) / 2.0,
            e_init: default_e_init(omega_sq),
            a: DEFAULT_STEEPNESS,
        }
    }

    pub fn harmonic(n: usize) -> Self {
        Self::new(1.0, 0.0, n)
    }

    pub fn anharmonic(omega_sq: f64, lambda: f64, n: usize) -> Self {
        Self::new(omega_sq, lambda, n)
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        if self.s != parity_sign(self.n) {
            return Err(ProblemError::Parity { n: self.n, s: self.s });
        }
        if !(self.half_width > 0.0) {
            return Err(ProblemError::HalfWidth(self.half_width));
        }
        if !(self.lambda >= 0.0) {
            return Err(ProblemError::Lambda(self.lambda));
        }
        if self.lambda == 0.0 && self.omega_sq == 0.0 {
            return Err(ProblemError::FreeParticle);
        }
        if !(self.a > 0.0) {
            return Err(ProblemError::Steepness(self.a));
        }
        Ok(())
    }

    #[inline]
    pub fn potential(&self, x: f64) -> f64 {
        let x2 = x * x;
        0.5 * self.omega_sq * x2 + self.lambda * x2 * x2
    }
}

/// `E_init` for the ground state: 0 for single wells, below the well bottom
/// scale `-1.5 |ω²| / 2` for double wells.
pub fn default_e_init(omega_sq: f64) -> f64 {
    if omega_sq < 0.0 {
        -1.5 * omega_sq.abs() / 2.0
    } else {
        0.0
    }
}

/// One weight per loss.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossWeights {
    pub integral: f64,
    pub normalization: f64,
    pub boundary: f64,
    pub orthogonality: f64,
    pub equation: f64,
    pub energy_min: f64,
    pub symmetry: f64,
}

/// Whether a run starts from scratch or from a converged neighbouring problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Fresh,
    Transfer,
}

/// Static weights plus the equation ramp and energy decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightSchedule {
    pub normalization: f64,
    pub integral: f64,
    pub boundary: f64,
    pub symmetry: f64,
    /// Orthogonality weight per quantum number (weight = this × n).
    pub orthogonality_per_state: f64,
    pub orthogonality_per_state_transfer: f64,
    pub equation_start: f64,
    pub equation_end: f64,
    pub equation_ramp_epochs: usize,
    pub energy_start: f64,
    pub energy_start_transfer: f64,
    pub energy_decay_epochs: usize,
}

impl Default for WeightSchedule {
    fn default() -> Self {
        Self {
            normalization: 500.0,
            integral: 1000.0,
            boundary: 10.0,
            symmetry: 1000.0,
            orthogonality_per_state: 500.0,
            orthogonality_per_state_transfer: 30.0,
            equation_start: 1.0,
            equation_end: 100.0,
            equation_ramp_epochs: 10_000,
            energy_start: 100.0,
            energy_start_transfer: 0.0,
            energy_decay_epochs: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleState {
    pub epoch: usize,
    pub scenario: Scenario,
}

impl WeightSchedule {
    pub fn weights(&self, n: usize, state: ScheduleState) -> LossWeights {
        let epoch = state.epoch as f64;
        let ramp = if self.equation_ramp_epochs == 0 {
            1.0
        } else {
            (epoch / self.equation_ramp_epochs as f64).min(1.0)
        };
        let decay = if self.energy_decay_epochs == 0 {
            0.0
        } else {
            (1.0 - epoch / self.energy_decay_epochs as f64).max(0.0)
        };
        let (orth, energy) = match state.scenario {
            Scenario::Fresh => (self.orthogonality_per_state, self.energy_start),
            Scenario::Transfer => (self.orthogonality_per_state_transfer, self.energy_start_transfer),
        };
        LossWeights {
            integral: self.integral,
            normalization: self.normalization,
            boundary: self.boundary,
            orthogonality: orth * n as f64,
            equation: self.equation_start + (self.equation_end - self.equation_start) * ramp,
            energy_min: energy * decay,
            symmetry: self.symmetry,
        }
    }
}

/// The seven loss values for one batch, their weights and the weighted sum.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub integral: f64,
    pub normalization: f64,
    pub boundary: f64,
    pub orthogonality: f64,
    pub equation: f64,
    pub energy_min: f64,
    pub symmetry: f64,
    pub weights: LossWeights,
    pub total: f64,
}

impl LossBreakdown {
    pub fn from_parts(parts: [f64; 7], weights: LossWeights) -> Self {
        let [integral, normalization, boundary, orthogonality, equation, energy_min, symmetry] = parts;
        let total = weights.integral * integral
            + weights.normalization * normalization
            + weights.boundary * boundary
            + weights.orthogonality * orthogonality
            + weights.equation * equation
            + weights.energy_min * energy_min
            + weights.symmetry * symmetry;
        Self {
            integral,
            normalization,
            boundary,
            orthogonality,
            equation,
            energy_min,
            symmetry,
            weights,
            total,
        }
    }

    pub const NAMES: [&'static str; 7] = [
        "integral",
        "normalization",
        "boundary",
        "orthogonality",
        "equation",
        "energy_min",
        "symmetry",
    ];

    pub fn parts(&self) -> [f64; 7] {
        [
            self.integral,
            self.normalization,
            self.boundary,
            self.orthogonality,
            self.equation,
            self.energy_min,
            self.symmetry,
        ]
    }

    /// Name of the first non-finite component, if any.
    pub fn non_finite_term(&self) -> Option<&'static str> {
        Self::NAMES
            .iter()
            .zip(self.parts())
            .find(|(_, v)| !v.is_finite())
            .map(|(name, _)| *name)
            .or((!self.total.is_finite()).then_some("total"))
    }
}

/// A converged state frozen on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchivedState {
    pub n: usize,
    pub energy: f64,
    pub grid: Vec<f64>,
    /// Values on `grid`, with unit discrete norm.
    pub values: Vec<f64>,
}

impl ArchivedState {
    /// Normalizes `values` to unit discrete norm on `grid`.
    pub fn new(n: usize, energy: f64, grid: Vec<f64>, mut values: Vec<f64>) -> Self {
        assert_eq!(grid.len(), values.len());
        assert!(grid.len() >= 2 && grid.windows(2).all(|w| w[0] < w[1]));
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            values.iter_mut().for_each(|v| *v /= norm);
        }
        Self {
            n,
            energy,
            grid,
            values,
        }
    }

    /// Linear interpolation inside the grid, zero outside it.
    pub fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = (self.grid[0], *self.grid.last().unwrap());
        if !(lo..=hi).contains(&x) {
            return 0.0;
        }
        let i = self.grid.partition_point(|&g| g <= x).clamp(1, self.grid.len() - 1);
        let (x0, x1) = (self.grid[i - 1], self.grid[i]);
        let t = (x - x0) / (x1 - x0);
        self.values[i - 1] * (1.0 - t) + self.values[i] * t
    }

    pub fn half_width(&self) -> f64 {
        self.grid.last().unwrap().abs().max(self.grid[0].abs())
    }
}

/// Previously converged states `0..n`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StateArchive {
    pub states: Vec<ArchivedState>,
}

impl StateArchive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn push(&mut self, state: ArchivedState) {
        self.states.push(state);
    }

    /// True when the archive holds exactly the states `0..n`, in order.
    pub fn holds_states_below(&self, n: usize) -> bool {
        self.states.len() == n && self.states.iter().enumerate().all(|(i, s)| s.n == i)
    }

    /// Archived states at `xs`, each vector normalized on `xs`.
    pub fn normalized_on(&self, xs: &[f64]) -> Vec<Vec<f64>> {
        self.states
            .iter()
            .map(|s| {
                let mut v: Vec<f64> = xs.iter().map(|&x| s.eval(x)).collect();
                let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                if norm > 0.0 {
                    v.iter_mut().for_each(|a| *a /= norm);
                }
                v
            })
            .collect()
    }
}

fn sae(err: f64) -> (f64, f64) {
    let g = if err > 0.0 {
        1.0
    } else if err < 0.0 {
        -1.0
    } else {
        0.0
    };
    (err.abs(), g)
}

/// Mean of `(ν' − ψ²)²`.
pub fn integral_loss(batch: &[EvalBundle]) -> f64 {
    assert!(!batch.is_empty(), "empty batch");
    batch
        .iter()
        .map(|b| {
            let r = b.dnu - b.psi * b.psi;
            r * r
        })
        .sum::<f64>()
        / batch.len() as f64
}

/// `|ν(−L/2)| + |ν(L/2) − 1|`.
pub fn normalization_sae(nu_left: f64, nu_right: f64) -> f64 {
    nu_left.abs() + (nu_right - 1.0).abs()
}

/// `|ψ(−L/2)| + |ψ(L/2)|`.
pub fn boundary_sae(psi_left: f64, psi_right: f64) -> f64 {
    psi_left.abs() + psi_right.abs()
}

pub fn normalization_loss(model: &ModelPair, half_width: f64) -> Result<f64, NetworkError> {
    let left = model.evaluate(-half_width)?;
    let right = model.evaluate(half_width)?;
    Ok(normalization_sae(left.nu, right.nu))
}

pub fn boundary_loss(model: &ModelPair, half_width: f64) -> Result<f64, NetworkError> {
    let left = model.evaluate(-half_width)?;
    let right = model.evaluate(half_width)?;
    Ok(boundary_sae(left.psi, right.psi))
}

/// `Σᵢ ⟨ψ̂|φ̂ᵢ⟩²` for a ψ vector against already-normalized archive vectors.
pub fn orthogonality_from_values(psi: &[f64], archived: &[Vec<f64>]) -> f64 {
    let norm = psi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return 0.0;
    }
    archived
        .iter()
        .map(|phi| {
            let o = psi.iter().zip(phi).map(|(a, b)| a * b).sum::<f64>() / norm;
            o * o
        })
        .sum()
}

/// Squared overlaps of ψ with every archived state on the batch grid.
pub fn orthogonality_loss(batch: &[EvalBundle], archive: &StateArchive) -> f64 {
    if archive.is_empty() {
        return 0.0;
    }
    let xs: Vec<f64> = batch.iter().map(|b| b.x).collect();
    let psi: Vec<f64> = batch.iter().map(|b| b.psi).collect();
    orthogonality_from_values(&psi, &archive.normalized_on(&xs))
}

#[inline]
fn residual(b: &EvalBundle, energy: f64, spec: &ProblemSpec) -> f64 {
    -0.5 * b.d2psi + (spec.potential(b.x) - energy) * b.psi
}

/// Mean squared Schrödinger residual.
pub fn equation_loss(batch: &[EvalBundle], energy: f64, spec: &ProblemSpec) -> f64 {
    batch
        .iter()
        .map(|b| residual(b, energy, spec).powi(2))
        .sum::<f64>()
        / batch.len() as f64
}

/// `exp(a (E − E_init))`.
pub fn energy_min_loss(energy: f64, spec: &ProblemSpec) -> f64 {
    (spec.a * (energy - spec.e_init)).exp()
}

/// Mean of `(ψ(x) − s ψ(−x))²` given ψ at the batch and at the mirrored batch.
pub fn symmetry_from_values(psi: &[f64], mirrored: &[f64], s: i32) -> f64 {
    let s = f64::from(s);
    psi.iter()
        .zip(mirrored)
        .map(|(a, b)| (a - s * b).powi(2))
        .sum::<f64>()
        / psi.len() as f64
}

pub fn symmetry_loss(batch: &[EvalBundle], model: &ModelPair, s: i32) -> Result<f64, NetworkError> {
    let psi: Vec<f64> = batch.iter().map(|b| b.psi).collect();
    let mirrored = batch
        .iter()
        .map(|b| model.evaluate(-b.x).map(|m| m.psi))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(symmetry_from_values(&psi, &mirrored, s))
}

/// Evaluates every loss at `xs` through the pointwise evaluation route.
pub fn total_loss(
    model: &ModelPair,
    xs: &[f64],
    spec: &ProblemSpec,
    archive: &StateArchive,
    schedule: &WeightSchedule,
    state: ScheduleState,
) -> Result<LossBreakdown, NetworkError> {
    let batch = xs
        .iter()
        .map(|&x| model.evaluate(x))
        .collect::<Result<Vec<_>, _>>()?;
    let energy = model.energy()?;
    let parts = [
        integral_loss(&batch),
        normalization_loss(model, spec.half_width)?,
        boundary_loss(model, spec.half_width)?,
        orthogonality_loss(&batch, archive),
        equation_loss(&batch, energy, spec),
        energy_min_loss(energy, spec),
        symmetry_loss(&batch, model, spec.s)?,
    ];
    Ok(LossBreakdown::from_parts(parts, schedule.weights(spec.n, state)))
}

/// ψ and ν at the two domain ends.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EndValues {
    pub psi_left: f64,
    pub psi_right: f64,
    pub nu_left: f64,
    pub nu_right: f64,
}

/// Everything the objective needs for one training step.
pub struct ObjectiveInputs<'a> {
    pub batch: &'a [EvalBundle],
    /// ψ at `−x` for every batch point.
    pub mirrored_psi: &'a [f64],
    pub ends: EndValues,
    pub energy: f64,
    /// Archived states on the batch grid, each normalized.
    pub archived: &'a [Vec<f64>],
}

/// Adjoint of the weighted total with respect to one [`EvalBundle`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BundleAdjoint {
    pub psi: f64,
    pub d2psi: f64,
    pub dnu: f64,
}

/// Adjoints of the weighted total with respect to every network output used.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObjectiveAdjoints {
    pub batch: Vec<BundleAdjoint>,
    pub mirrored_psi: Vec<f64>,
    pub ends: EndValues,
    pub energy: f64,
}

/// Losses and their adjoints for one step.
///
/// Component values agree with the standalone loss functions; the adjoints
/// are the exact derivatives of `total` (subgradient 0 at kinks of |·|).
pub fn objective(
    inp: &ObjectiveInputs<'_>,
    spec: &ProblemSpec,
    weights: LossWeights,
) -> (LossBreakdown, ObjectiveAdjoints) {
    let m = inp.batch.len();
    let inv_m = 1.0 / m as f64;
    let mut adj = ObjectiveAdjoints {
        batch: vec![BundleAdjoint::default(); m],
        mirrored_psi: vec![0.0; m],
        ..Default::default()
    };

    let mut integral = 0.0;
    let mut equation = 0.0;
    let mut symmetry = 0.0;
    let s = f64::from(spec.s);
    for (i, b) in inp.batch.iter().enumerate() {
        let a = &mut adj.batch[i];

        let r_int = b.dnu - b.psi * b.psi;
        integral += r_int * r_int;
        let g_int = weights.integral * 2.0 * r_int * inv_m;
        a.dnu += g_int;
        a.psi -= g_int * 2.0 * b.psi;

        let v = spec.potential(b.x) - inp.energy;
        let r_eq = -0.5 * b.d2psi + v * b.psi;
        equation += r_eq * r_eq;
        let g_eq = weights.equation * 2.0 * r_eq * inv_m;
        a.d2psi -= 0.5 * g_eq;
        a.psi += g_eq * v;
        adj.energy -= g_eq * b.psi;

        let r_sym = b.psi - s * inp.mirrored_psi[i];
        symmetry += r_sym * r_sym;
        let g_sym = weights.symmetry * 2.0 * r_sym * inv_m;
        a.psi += g_sym;
        adj.mirrored_psi[i] -= g_sym * s;
    }
    integral *= inv_m;
    equation *= inv_m;
    symmetry *= inv_m;

    let (nl, gnl) = sae(inp.ends.nu_left);
    let (nr, gnr) = sae(inp.ends.nu_right - 1.0);
    let normalization = nl + nr;
    adj.ends.nu_left = weights.normalization * gnl;
    adj.ends.nu_right = weights.normalization * gnr;

    let (bl, gbl) = sae(inp.ends.psi_left);
    let (br, gbr) = sae(inp.ends.psi_right);
    let boundary = bl + br;
    adj.ends.psi_left = weights.boundary * gbl;
    adj.ends.psi_right = weights.boundary * gbr;

    let mut orthogonality = 0.0;
    let norm = inp.batch.iter().map(|b| b.psi * b.psi).sum::<f64>().sqrt();
    if norm > 0.0 && !inp.archived.is_empty() {
        let inv_norm = 1.0 / norm;
        for phi in inp.archived {
            let o = inp
                .batch
                .iter()
                .zip(phi)
                .map(|(b, p)| b.psi * p)
                .sum::<f64>()
                * inv_norm;
            orthogonality += o * o;
            // d o / d ψ_j = (φ_j − o ψ̂_j) / |ψ|
            let g = weights.orthogonality * 2.0 * o * inv_norm;
            for (a, (b, p)) in adj.batch.iter_mut().zip(inp.batch.iter().zip(phi)) {
                a.psi += g * (p - o * b.psi * inv_norm);
            }
        }
    }

    let energy_min = (spec.a * (inp.energy - spec.e_init)).exp();
    adj.energy += weights.energy_min * spec.a * energy_min;

    let breakdown = LossBreakdown::from_parts(
        [
            integral,
            normalization,
            boundary,
            orthogonality,
            equation,
            energy_min,
            symmetry,
        ],
        weights,
    );
    (breakdown, adj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::networks::{ModelShape, NetworkParams};

    fn bundle(x: f64, psi: f64, d2psi: f64, nu: f64, dnu: f64) -> EvalBundle {
        EvalBundle {
            x,
            psi,
            dpsi: 0.0,
            d2psi,
            nu,
            dnu,
            energy: 0.0,
        }
    }

    fn gaussian_batch(n: usize, hw: f64) -> Vec<EvalBundle> {
        (0..n)
            .map(|i| {
                let x = -hw + 2.0 * hw * i as f64 / (n - 1) as f64;
                let g = (-x * x / 2.0).exp();
                bundle(x, g, (x * x - 1.0) * g, 0.0, 0.0)
            })
            .collect()
    }

    #[test]
    fn integral_loss_cases() {
        let zero: Vec<_> = (0..4).map(|i| bundle(i as f64, 0.0, 0.0, 0.0, 0.0)).collect();
        assert_eq!(integral_loss(&zero), 0.0);
        let exact: Vec<_> = (0..4).map(|i| bundle(i as f64, 0.7, 0.0, 0.2, 0.49)).collect();
        assert!(integral_loss(&exact) < 1e-30);
        let ones: Vec<_> = (0..4).map(|i| bundle(i as f64, 1.0, 0.0, 0.0, 0.0)).collect();
        assert_eq!(integral_loss(&ones), 1.0);
    }

    #[test]
    fn normalization_and_boundary_cases() {
        assert_eq!(normalization_sae(0.0, 1.0), 0.0);
        assert_eq!(normalization_sae(0.0, 0.0), 1.0);
        assert!((normalization_sae(0.1, 0.8) - 0.3).abs() < 1e-15);
        assert_eq!(boundary_sae(0.0, 0.0), 0.0);
        assert!((boundary_sae(0.2, -0.1) - 0.3).abs() < 1e-15);
        assert_eq!(boundary_sae(0.25, 0.25), 0.5);
    }

    #[test]
    fn zero_network_only_fails_normalization() {
        let m = ModelPair {
            psi_net: NetworkParams::zeros(&[1, 4, 2]).unwrap(),
            energy_net: NetworkParams::zeros(&[1, 4, 1]).unwrap(),
        };
        assert_eq!(normalization_loss(&m, 3.5).unwrap(), 1.0);
        assert_eq!(boundary_loss(&m, 3.5).unwrap(), 0.0);
    }

    #[test]
    fn orthogonality_cases() {
        let batch = gaussian_batch(101, 4.0);
        assert_eq!(orthogonality_loss(&batch, &StateArchive::new()), 0.0);

        let grid: Vec<f64> = batch.iter().map(|b| b.x).collect();
        let mut same = StateArchive::new();
        same.push(ArchivedState::new(0, 0.5, grid.clone(), batch.iter().map(|b| b.psi).collect()));
        assert!((orthogonality_loss(&batch, &same) - 1.0).abs() < 1e-12);

        let odd: Vec<_> = batch.iter().map(|b| bundle(b.x, b.x * b.psi, 0.0, 0.0, 0.0)).collect();
        assert!(orthogonality_loss(&odd, &same) < 1e-28);

        let flipped: Vec<_> = batch.iter().map(|b| bundle(b.x, -0.3 * b.psi + 0.1 * b.x, 0.0, 0.0, 0.0)).collect();
        let unflipped: Vec<_> = flipped.iter().map(|b| bundle(b.x, -b.psi, 0.0, 0.0, 0.0)).collect();
        assert!((orthogonality_loss(&flipped, &same) - orthogonality_loss(&unflipped, &same)).abs() < 1e-15);
    }

    #[test]
    fn archive_interpolates_and_vanishes_outside() {
        let s = ArchivedState::new(0, 0.5, vec![-1.0, 0.0, 1.0], vec![0.0, 2.0, 0.0]);
        assert!((s.eval(0.0) - 1.0).abs() < 1e-15);
        assert!((s.eval(0.5) - 0.5).abs() < 1e-15);
        assert_eq!(s.eval(1.5), 0.0);
        assert_eq!(s.eval(-1.0), 0.0);
    }

    #[test]
    fn equation_loss_cases() {
        let spec = ProblemSpec::harmonic(0);
        let batch = gaussian_batch(64, 3.5);
        assert!(equation_loss(&batch, 0.5, &spec) < 1e-28);
        let expected = batch.iter().map(|b| (0.1 * b.psi).powi(2)).sum::<f64>() / 64.0;
        assert!((equation_loss(&batch, 0.6, &spec) - expected).abs() < 1e-15);
        let zero: Vec<_> = batch.iter().map(|b| bundle(b.x, 0.0, 0.0, 0.0, 0.0)).collect();
        assert_eq!(equation_loss(&zero, 3.0, &spec), 0.0);
    }

    #[test]
    fn energy_loss_cases() {
        let spec = ProblemSpec::harmonic(0);
        assert_eq!(energy_min_loss(spec.e_init, &spec), 1.0);
        assert!((energy_min_loss(-1.0, &spec) - (-0.8f64).exp()).abs() < 1e-15);
        assert!((energy_min_loss(-1.0, &spec) - 0.449_328_964).abs() < 1e-9);
        assert!(energy_min_loss(0.2, &spec) < energy_min_loss(0.3, &spec));
    }

    #[test]
    fn symmetry_cases() {
        let xs = [-1.0, -0.3, 0.4, 2.0];
        let even: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let odd: Vec<f64> = xs.iter().map(|x| x * x * x).collect();
        let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
        assert_eq!(symmetry_from_values(&even, &even, 1), 0.0);
        assert_eq!(symmetry_from_values(&odd, &neg(&odd), -1), 0.0);
        // ψ(x) = x on {1, −1}: (1 − (−1))² = 4 at both points.
        assert_eq!(symmetry_from_values(&[1.0, -1.0], &[-1.0, 1.0], 1), 4.0);
    }

    #[test]
    fn schedule_weights() {
        let sched = WeightSchedule::default();
        let fresh = |epoch| ScheduleState { epoch, scenario: Scenario::Fresh };
        let w = sched.weights(3, fresh(0));
        assert_eq!(w.orthogonality, 1500.0);
        assert_eq!((w.normalization, w.integral, w.boundary, w.symmetry), (500.0, 1000.0, 10.0, 1000.0));
        assert_eq!((w.equation, w.energy_min), (1.0, 100.0));
        let w = sched.weights(3, fresh(5_000));
        assert!((w.equation - 50.5).abs() < 1e-12);
        assert!((w.energy_min - 50.0).abs() < 1e-12);
        let w = sched.weights(3, fresh(25_000));
        assert_eq!((w.equation, w.energy_min), (100.0, 0.0));
        let w = sched.weights(3, ScheduleState { epoch: 0, scenario: Scenario::Transfer });
        assert_eq!((w.orthogonality, w.energy_min), (90.0, 0.0));
        assert_eq!(sched.weights(0, fresh(0)).orthogonality, 0.0);
    }

    #[test]
    fn only_energy_contributes() {
        let spec = ProblemSpec::harmonic(0);
        let w = WeightSchedule::default().weights(0, ScheduleState { epoch: 0, scenario: Scenario::Fresh });
        let b = LossBreakdown::from_parts([0.0, 0.0, 0.0, 0.0, 0.0, energy_min_loss(-0.5, &spec), 0.0], w);
        assert!((b.total - 100.0 * (0.8f64 * -0.5).exp()).abs() < 1e-12);
    }

    #[test]
    fn problem_validation() {
        assert!(ProblemSpec::harmonic(2).validate().is_ok());
        let mut p = ProblemSpec::harmonic(1);
        p.s = 1;
        assert_eq!(p.validate(), Err(ProblemError::Parity { n: 1, s: 1 }));
        let p = ProblemSpec::new(0.0, 0.0, 0);
        assert_eq!(p.validate(), Err(ProblemError::FreeParticle));
        assert_eq!(ProblemSpec::harmonic(5).half_width, 8.5);
        assert!((default_e_init(-14.0) + 10.5).abs() < 1e-15);
    }

    /// The objective's component values agree with the standalone losses.
    #[test]
    fn objective_matches_pointwise_route() {
        let model = ModelPair::init(&ModelShape { psi_hidden: vec![8, 8], energy_hidden: vec![4] }, 3).unwrap();
        let mut spec = ProblemSpec::anharmonic(1.0, 0.3, 1);
        spec.e_init = 0.4;
        let xs: Vec<f64> = (0..17).map(|i| -2.0 + 0.25 * i as f64).collect();
        let mut archive = StateArchive::new();
        let grid: Vec<f64> = (0..200).map(|i| -3.0 + 6.0 * i as f64 / 199.0).collect();
        let vals = grid.iter().map(|x| (-x * x / 2.0f64).exp()).collect();
        archive.push(ArchivedState::new(0, 0.5, grid, vals));
        let sched = WeightSchedule::default();
        let state = ScheduleState { epoch: 1234, scenario: Scenario::Fresh };
        let reference = total_loss(&model, &xs, &spec, &archive, &sched, state).unwrap();

        let batch: Vec<_> = xs.iter().map(|&x| model.evaluate(x).unwrap()).collect();
        let mirrored: Vec<f64> = xs.iter().map(|&x| model.evaluate(-x).unwrap().psi).collect();
        let l = model.evaluate(-spec.half_width).unwrap();
        let r = model.evaluate(spec.half_width).unwrap();
        let archived = archive.normalized_on(&xs);
        let inputs = ObjectiveInputs {
            batch: &batch,
            mirrored_psi: &mirrored,
            ends: EndValues { psi_left: l.psi, psi_right: r.psi, nu_left: l.nu, nu_right: r.nu },
            energy: model.energy().unwrap(),
            archived: &archived,
        };
        let (b, _) = objective(&inputs, &spec, sched.weights(1, state));
        for (x, y) in b.parts().iter().zip(reference.parts()) {
            assert!((x - y).abs() <= 1e-13 * (1.0 + y.abs()), "{x} vs {y}");
        }
        assert!((b.total - reference.total).abs() <= 1e-12 * reference.total);
    }
}
