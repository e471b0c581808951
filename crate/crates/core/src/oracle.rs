//! Reference solutions: finite-difference diagonalization of the Hamiltonian,
//! analytic harmonic eigenstates, and the perturbative energy series.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sampling::harmonic_domain;
use crate::tridiag::{inverse_iteration, lowest_eigenvalues, TridiagError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("domain [-{half_width}, {half_width}] too small: state {state} has amplitude {amplitude:e} at the edge")]
    DomainTooSmall {
        state: usize,
        half_width: f64,
        amplitude: f64,
    },
    #[error("energy of state {state} not converged under grid refinement (change {change:e})")]
    NotConverged { state: usize, change: f64 },
    #[error("eigensolver: {0}")]
    Eigensolver(#[from] TridiagError),
    #[error("invalid oracle request: {0}")]
    Invalid(String),
}

pub const DEFAULT_GRID_POINTS: usize = 4001;
/// Edge amplitude (unit discrete norm) above which the domain is rejected.
pub const EDGE_TOLERANCE: f64 = 1e-8;
/// Allowed change of an extrapolated energy under grid refinement.
pub const REFINEMENT_TOLERANCE: f64 = 1e-8;

/// Reference eigenpairs on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub omega_sq: f64,
    pub lambda: f64,
    /// Uniform grid over `[-X, X]`, endpoints included.
    pub grid: Vec<f64>,
    /// Grid-converged energies, ascending.
    pub energies: Vec<f64>,
    /// Eigenvalues of the discrete operator on `grid` itself.
    pub grid_energies: Vec<f64>,
    /// One vector per state on `grid` (zero at both ends), unit discrete norm,
    /// first significant component positive.
    pub wavefunctions: Vec<Vec<f64>>,
}

impl OracleSolution {
    pub fn half_width(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    pub fn spacing(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    /// Linear interpolation of state `k`, zero outside the grid.
    pub fn eval(&self, k: usize, x: f64) -> f64 {
        interpolate(&self.grid, &self.wavefunctions[k], x)
    }

    /// Number of sign changes of state `k` among its significant values.
    pub fn nodes(&self, k: usize) -> usize {
        let v = &self.wavefunctions[k];
        let peak = v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        let mut last = 0.0f64;
        let mut count = 0;
        for &a in v {
            if a.abs() < 1e-6 * peak {
                continue;
            }
            if last != 0.0 && a.signum() != last.signum() {
                count += 1;
            }
            last = a;
        }
        count
    }
}

fn interpolate(grid: &[f64], values: &[f64], x: f64) -> f64 {
    let (lo, hi) = (grid[0], *grid.last().unwrap());
    if !(lo..=hi).contains(&x) {
        return 0.0;
    }
    let h = grid[1] - grid[0];
    let i = (((x - lo) / h).floor() as usize).min(grid.len() - 2);
    let t = (x - grid[i]) / h;
    values[i] * (1.0 - t) + values[i + 1] * t
}

fn uniform_grid(half_width: f64, points: usize) -> Vec<f64> {
    let h = 2.0 * half_width / (points - 1) as f64;
    (0..points)
        .map(|i| if i == points - 1 { half_width } else { -half_width + i as f64 * h })
        .collect()
}

/// Tridiagonal central-difference Hamiltonian on the interior grid points.
fn hamiltonian(omega_sq: f64, lambda: f64, grid: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let h = grid[1] - grid[0];
    let kinetic = 1.0 / (h * h);
    let interior = &grid[1..grid.len() - 1];
    let d = interior
        .iter()
        .map(|&x| kinetic + 0.5 * omega_sq * x * x + lambda * x.powi(4))
        .collect();
    let e = vec![-0.5 * kinetic; interior.len() - 1];
    (d, e)
}

fn grid_eigenvalues(omega_sq: f64, lambda: f64, half_width: f64, points: usize, k: usize) -> Result<Vec<f64>, OracleError> {
    let grid = uniform_grid(half_width, points);
    let (d, e) = hamiltonian(omega_sq, lambda, &grid);
    Ok(lowest_eigenvalues(&d, &e, k)?)
}

/// Makes the first component above `1e-4 · max|v|` positive.
fn fix_sign(v: &mut [f64]) {
    let peak = v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    if let Some(first) = v.iter().find(|a| a.abs() > 1e-4 * peak) {
        if *first < 0.0 {
            v.iter_mut().for_each(|a| *a = -*a);
        }
    }
}

/// Lowest `k` eigenpairs of `−½ d²/dx² + ½ω²x² + λx⁴` on `[−X, X]` with
/// Dirichlet ends.
///
/// Wavefunctions come from the `grid_points` grid. Energies are Richardson
/// extrapolated from that grid and two successive halvings of its spacing;
/// the extrapolated value must move by less than [`REFINEMENT_TOLERANCE`]
/// between the last two refinement levels.
pub fn diagonalize(
    omega_sq: f64,
    lambda: f64,
    half_width: f64,
    grid_points: usize,
    k: usize,
) -> Result<OracleSolution, OracleError> {
    if grid_points < 201 {
        return Err(OracleError::Invalid(format!("grid_points = {grid_points} < 201")));
    }
    if k == 0 || k > grid_points - 2 {
        return Err(OracleError::Invalid(format!("cannot request {k} states")));
    }
    if !(half_width > 0.0) || !omega_sq.is_finite() || !(lambda >= 0.0) {
        return Err(OracleError::Invalid(format!(
            "omega_sq = {omega_sq}, lambda = {lambda}, X = {half_width}"
        )));
    }

    let grid = uniform_grid(half_width, grid_points);
    let (d, e) = hamiltonian(omega_sq, lambda, &grid);
    let grid_energies = lowest_eigenvalues(&d, &e, k)?;

    let mut wavefunctions = Vec::with_capacity(k);
    let mut interior: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (state, &energy) in grid_energies.iter().enumerate() {
        let v = inverse_iteration(&d, &e, energy, &interior)?;
        let edge = v[0].abs().max(v[v.len() - 1].abs());
        if edge >= EDGE_TOLERANCE {
            return Err(OracleError::DomainTooSmall {
                state,
                half_width,
                amplitude: edge,
            });
        }
        let mut full = Vec::with_capacity(grid_points);
        full.push(0.0);
        full.extend(&v);
        full.push(0.0);
        fix_sign(&mut full);
        wavefunctions.push(full);
        interior.push(v);
    }

    let fine = grid_eigenvalues(omega_sq, lambda, half_width, 2 * grid_points - 1, k)?;
    let finest = grid_eigenvalues(omega_sq, lambda, half_width, 4 * grid_points - 3, k)?;
    let mut energies = Vec::with_capacity(k);
    for state in 0..k {
        let coarse_rich = (4.0 * fine[state] - grid_energies[state]) / 3.0;
        let fine_rich = (4.0 * finest[state] - fine[state]) / 3.0;
        let romberg = (16.0 * fine_rich - coarse_rich) / 15.0;
        let change = (romberg - fine_rich).abs();
        if change >= REFINEMENT_TOLERANCE * energies_scale(romberg) {
            return Err(OracleError::NotConverged { state, change });
        }
        energies.push(romberg);
    }

    Ok(OracleSolution {
        omega_sq,
        lambda,
        grid,
        energies,
        grid_energies,
        wavefunctions,
    })
}

fn energies_scale(e: f64) -> f64 {
    e.abs().max(1.0)
}

/// Default oracle half-width for the lowest `k` states: `L(k)/2 + 2`,
/// widened for weak pure-quartic
/// potentials whose states spread as `λ^(-1/6)`.
pub fn default_half_width(omega_sq: f64, lambda: f64, k: usize) -> f64 {
    let base = harmonic_domain(k) / 2.0 + 2.0;
    if omega_sq <= 0.0 && lambda > 0.0 && lambda < 1.0 {
        base * lambda.powf(-1.0 / 6.0)
    } else {
        base
    }
}

/// [`diagonalize`] on the default domain, widening it until the edge check
/// passes.
pub fn solve_reference(omega_sq: f64, lambda: f64, k: usize, grid_points: usize) -> Result<OracleSolution, OracleError> {
    let mut x = default_half_width(omega_sq, lambda, k);
    for _ in 0..6 {
        match diagonalize(omega_sq, lambda, x, grid_points, k) {
            Err(OracleError::DomainTooSmall { .. }) => x *= 1.5,
            other => return other,
        }
    }
    diagonalize(omega_sq, lambda, x, grid_points, k)
}

/// Normalized harmonic eigenstate `n` of frequency `omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicState {
    pub n: usize,
    pub omega: f64,
}

impl HarmonicState {
    pub fn new(n: usize, omega: f64) -> Self {
        Self { n, omega }
    }

    pub fn energy(&self) -> f64 {
        (self.n as f64 + 0.5) * self.omega
    }

    /// Hermite function value, L²-normalized, via the stable three-term
    /// recurrence.
    pub fn eval(&self, x: f64) -> f64 {
        let xi = self.omega.sqrt() * x;
        let mut prev = 0.0;
        let mut cur = (self.omega / std::f64::consts::PI).powf(0.25) * (-0.5 * xi * xi).exp();
        for m in 0..self.n {
            let m = m as f64;
            let next = (2.0 / (m + 1.0)).sqrt() * xi * cur - (m / (m + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
        }
        cur
    }
}

/// Harmonic state `n` on `grid` with unit discrete norm, and its energy.
pub fn harmonic_exact(n: usize, omega: f64, grid: &[f64]) -> (Vec<f64>, f64) {
    let state = HarmonicState::new(n, omega);
    let mut v: Vec<f64> = grid.iter().map(|&x| state.eval(x)).collect();
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|a| *a /= norm);
    }
    (v, state.energy())
}

/// Second-order perturbative energy of state `n` for `ω = 1`, with the
/// resummed denominators. Terms whose numerator vanishes are dropped before
/// dividing, so a vanishing denominator of an absent term is harmless.
pub fn perturbative_energy(n: usize, lambda: f64) -> f64 {
    let n = n as f64;
    let term = |num: f64, den: f64| if num == 0.0 { 0.0 } else { num / den };
    let second = term(
        (n + 1.0) * (n + 1.5).powi(2) * (n + 2.0),
        2.0 + 3.0 * lambda * (2.0 * n + 3.0),
    ) - term(
        n * (n - 0.5).powi(2) * (n - 1.0),
        2.0 + 3.0 * lambda * (2.0 * n - 1.0),
    ) + term(
        (n + 1.0) * (n + 2.0) * (n + 3.0) * (n + 4.0),
        16.0 * (4.0 + 6.0 * lambda * (2.0 * n + 5.0)),
    ) - term(
        n * (n - 1.0) * (n - 2.0) * (n - 3.0),
        16.0 * (4.0 + 6.0 * lambda * (2.0 * n - 3.0)),
    );
    (n + 0.5) + 0.75 * lambda * (1.0 + 2.0 * n * (n + 1.0)) - lambda * lambda * second
}
