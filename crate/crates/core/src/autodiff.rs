//! Second-order forward jets in the network input plus reverse accumulation
//! over network parameters.
//!
//! The network input is a scalar `x`, so every activation can carry its value
//! together with its first and second derivative in `x` ([`Jet2`]). Losses
//! built from those three components are differentiated with respect to the
//! weights by replaying the recorded layer activations backwards ([`Tape`]).
//!
//! Two forward routes exist: [`jet_forward`] walks one point through the
//! network with scalar `Jet2` arithmetic, while [`Tape::forward`] evaluates a
//! whole batch as dense matrix products. The scalar route is the reference the
//! batched one is tested against.

use std::ops::{Add, Div, Mul, Neg, Sub};

use ndarray::{s, Array1, Array2, Axis, Zip};
use thiserror::Error;

use crate::networks::NetworkParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutodiffError {
    #[error("network configuration: {0}")]
    Config(String),
    #[error("non-finite value in loss term `{term}`")]
    NonFinite { term: &'static str },
}

/// Value and first two derivatives with respect to the network input.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet2 {
    pub const fn new(value: f64, d1: f64, d2: f64) -> Self {
        Self { value, d1, d2 }
    }

    pub const fn constant(value: f64) -> Self {
        Self::new(value, 0.0, 0.0)
    }

    /// The independent variable itself.
    pub const fn variable(x: f64) -> Self {
        Self::new(x, 1.0, 0.0)
    }

    /// Applies a scalar function given its value and first two derivatives at
    /// `self.value`.
    #[inline]
    pub fn chain(self, f: f64, df: f64, d2f: f64) -> Self {
        Self {
            value: f,
            d1: df * self.d1,
            d2: d2f * self.d1 * self.d1 + df * self.d2,
        }
    }

    #[inline]
    pub fn tanh(self) -> Self {
        let t = self.value.tanh();
        let s = 1.0 - t * t;
        self.chain(t, s, -2.0 * t * s)
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn ln(self) -> Self {
        let inv = 1.0 / self.value;
        self.chain(self.value.ln(), inv, -inv * inv)
    }

    pub fn sin(self) -> Self {
        let (sn, cs) = self.value.sin_cos();
        self.chain(sn, cs, -sn)
    }

    pub fn cos(self) -> Self {
        let (sn, cs) = self.value.sin_cos();
        self.chain(cs, -sn, -cs)
    }

    pub fn sqrt(self) -> Self {
        let r = self.value.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * self.value))
    }

    pub fn powi(self, n: i32) -> Self {
        let x = self.value;
        let nf = f64::from(n);
        match n {
            0 => Self::constant(1.0),
            1 => self,
            _ => self.chain(
                x.powi(n),
                nf * x.powi(n - 1),
                nf * (nf - 1.0) * x.powi(n - 2),
            ),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.d1.is_finite() && self.d2.is_finite()
    }
}

impl Add for Jet2 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.value + rhs.value, self.d1 + rhs.d1, self.d2 + rhs.d2)
    }
}

impl Sub for Jet2 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.value - rhs.value, self.d1 - rhs.d1, self.d2 - rhs.d2)
    }
}

impl Mul for Jet2 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.value * rhs.value,
            self.d1 * rhs.value + self.value * rhs.d1,
            self.d2 * rhs.value + 2.0 * self.d1 * rhs.d1 + self.value * rhs.d2,
        )
    }
}

impl Div for Jet2 {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let inv = 1.0 / rhs.value;
        let r = rhs.chain(inv, -inv * inv, 2.0 * inv * inv * inv);
        self * r
    }
}

impl Neg for Jet2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.value, -self.d1, -self.d2)
    }
}

impl Add<f64> for Jet2 {
    type Output = Self;
    fn add(self, rhs: f64) -> Self {
        Self::new(self.value + rhs, self.d1, self.d2)
    }
}

impl Mul<f64> for Jet2 {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self::new(self.value * rhs, self.d1 * rhs, self.d2 * rhs)
    }
}

impl Mul<Jet2> for f64 {
    type Output = Jet2;
    fn mul(self, rhs: Jet2) -> Jet2 {
        rhs * self
    }
}

fn check_scalar_input(params: &NetworkParams) -> Result<(), AutodiffError> {
    params
        .validate()
        .map_err(|e| AutodiffError::Config(e.to_string()))?;
    if params.input_dim() != 1 {
        return Err(AutodiffError::Config(format!(
            "network input dimension is {}, expected 1",
            params.input_dim()
        )));
    }
    Ok(())
}

/// Propagates a single input through the network with scalar jet arithmetic.
///
/// Hidden layers use `tanh`, the output layer is affine. Returns one jet per
/// output head.
pub fn jet_forward(params: &NetworkParams, x: f64) -> Result<Vec<Jet2>, AutodiffError> {
    check_scalar_input(params)?;
    let mut act = vec![Jet2::variable(x)];
    let last = params.num_layers() - 1;
    for (l, (w, b)) in params.weights.iter().zip(&params.biases).enumerate() {
        let mut next = Vec::with_capacity(w.nrows());
        for (row, &bias) in w.outer_iter().zip(b.iter()) {
            let mut z = Jet2::constant(bias);
            for (&wij, a) in row.iter().zip(&act) {
                z = z + *a * wij;
            }
            next.push(if l == last { z } else { z.tanh() });
        }
        act = next;
    }
    Ok(act)
}

/// Column layout of a batched evaluation.
///
/// The first `num_jets` points carry first and second input derivatives; the
/// remaining points are value-only. Columns of every activation matrix are
/// laid out as `[values of all points | d1 of jet points | d2 of jet points]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<f64>,
    num_jets: usize,
}

impl PointSet {
    pub fn new(jet_points: &[f64], value_points: &[f64]) -> Self {
        let mut points = Vec::with_capacity(jet_points.len() + value_points.len());
        points.extend_from_slice(jet_points);
        points.extend_from_slice(value_points);
        Self {
            points,
            num_jets: jet_points.len(),
        }
    }

    pub fn values_only(points: &[f64]) -> Self {
        Self::new(&[], points)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn num_jets(&self) -> usize {
        self.num_jets
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    fn num_columns(&self) -> usize {
        self.points.len() + 2 * self.num_jets
    }
}

/// Network outputs for a [`PointSet`]: one row per output head, columns as
/// described on [`PointSet`].
#[derive(Debug, Clone)]
pub struct Outputs {
    data: Array2<f64>,
    num_points: usize,
    num_jets: usize,
}

impl Outputs {
    pub fn num_heads(&self) -> usize {
        self.data.nrows()
    }

    pub fn value(&self, head: usize, point: usize) -> f64 {
        self.data[[head, point]]
    }

    /// Jet of `head` at jet point `point` (must be `< num_jets`).
    pub fn jet(&self, head: usize, point: usize) -> Jet2 {
        debug_assert!(point < self.num_jets);
        Jet2::new(
            self.data[[head, point]],
            self.data[[head, self.num_points + point]],
            self.data[[head, self.num_points + self.num_jets + point]],
        )
    }

    /// An all-zero seed shaped like these outputs.
    pub fn zero_seed(&self) -> Seed {
        Seed {
            data: Array2::zeros(self.data.raw_dim()),
            num_points: self.num_points,
            num_jets: self.num_jets,
        }
    }
}

/// Adjoint of a scalar objective with respect to every entry of [`Outputs`].
#[derive(Debug, Clone)]
pub struct Seed {
    data: Array2<f64>,
    num_points: usize,
    num_jets: usize,
}

impl Seed {
    pub fn add_value(&mut self, head: usize, point: usize, g: f64) {
        self.data[[head, point]] += g;
    }

    pub fn add_d1(&mut self, head: usize, point: usize, g: f64) {
        self.data[[head, self.num_points + point]] += g;
    }

    pub fn add_d2(&mut self, head: usize, point: usize, g: f64) {
        self.data[[head, self.num_points + self.num_jets + point]] += g;
    }

    pub fn scale(&mut self, factor: f64) {
        self.data *= factor;
    }
}

struct LayerRecord {
    /// Input activations of this layer (`in × columns`).
    input: Array2<f64>,
    /// Pre-activations (`out × columns`); only kept for hidden layers.
    pre: Option<Array2<f64>>,
}

/// Recorded forward pass of one network over a [`PointSet`].
///
/// The record is the per-layer activation matrices. Replaying it backwards
/// with a [`Seed`] yields the parameter gradient of the seeded objective.
pub struct Tape {
    layers: Vec<LayerRecord>,
    outputs: Outputs,
}

/// Applies `tanh` to the jet columns of a pre-activation matrix.
fn tanh_jets(z: &Array2<f64>, num_points: usize, num_jets: usize) -> Array2<f64> {
    let mut h = Array2::zeros(z.raw_dim());
    let (np, nj) = (num_points, num_jets);
    for (zrow, mut hrow) in z.outer_iter().zip(h.outer_iter_mut()) {
        for p in 0..np {
            hrow[p] = zrow[p].tanh();
        }
        for j in 0..nj {
            let t = hrow[j];
            let s = 1.0 - t * t;
            let z1 = zrow[np + j];
            let z2 = zrow[np + nj + j];
            hrow[np + j] = s * z1;
            hrow[np + nj + j] = s * z2 - 2.0 * t * s * z1 * z1;
        }
    }
    h
}

/// Maps the adjoint of `tanh` outputs back onto its pre-activation jets.
fn tanh_jets_adjoint(
    grad_h: &mut Array2<f64>,
    h: &Array2<f64>,
    z: &Array2<f64>,
    num_points: usize,
    num_jets: usize,
) {
    let (np, nj) = (num_points, num_jets);
    for ((mut grow, hrow), zrow) in grad_h
        .outer_iter_mut()
        .zip(h.outer_iter())
        .zip(z.outer_iter())
    {
        for j in 0..nj {
            let t = hrow[j];
            let s = 1.0 - t * t;
            let z1 = zrow[np + j];
            let z2 = zrow[np + nj + j];
            let (gv, g1, g2) = (grow[j], grow[np + j], grow[np + nj + j]);
            let ts = t * s;
            grow[j] = gv * s
                - 2.0 * ts * z1 * g1
                + g2 * (-2.0 * ts * z2 - 2.0 * z1 * z1 * (s * s - 2.0 * t * ts));
            grow[np + j] = g1 * s - 4.0 * ts * z1 * g2;
            grow[np + nj + j] = g2 * s;
        }
        for p in nj..np {
            let t = hrow[p];
            grow[p] *= 1.0 - t * t;
        }
    }
}

impl Tape {
    /// Batched forward pass recording every layer.
    pub fn forward(params: &NetworkParams, points: &PointSet) -> Result<Self, AutodiffError> {
        check_scalar_input(params)?;
        let np = points.len();
        let nj = points.num_jets();
        let mut input = Array2::zeros((1, points.num_columns()));
        for (c, &x) in points.points().iter().enumerate() {
            input[[0, c]] = x;
        }
        for j in 0..nj {
            input[[0, np + j]] = 1.0;
        }

        let last = params.num_layers() - 1;
        let mut layers = Vec::with_capacity(params.num_layers());
        for (l, (w, b)) in params.weights.iter().zip(&params.biases).enumerate() {
            let mut z = w.dot(&input);
            z.slice_mut(s![.., ..np])
                .axis_iter_mut(Axis(1))
                .for_each(|mut col| col += b);
            if l == last {
                layers.push(LayerRecord { input, pre: None });
                return Ok(Self {
                    layers,
                    outputs: Outputs {
                        data: z,
                        num_points: np,
                        num_jets: nj,
                    },
                });
            }
            let h = tanh_jets(&z, np, nj);
            layers.push(LayerRecord {
                input,
                pre: Some(z),
            });
            input = h;
        }
        unreachable!("validated networks have at least one layer")
    }

    pub fn outputs(&self) -> &Outputs {
        &self.outputs
    }

    /// Reverse accumulation of `seed` through the recorded layers.
    ///
    /// The returned gradient has the same layout as the network parameters.
    /// Summation order is fixed, so equal inputs give bitwise-equal results.
    pub fn backward(&self, params: &NetworkParams, seed: &Seed) -> NetworkParams {
        let np = self.outputs.num_points;
        let nj = self.outputs.num_jets;
        let mut grad = params.zeros_like();
        let mut g = seed.data.clone();
        for l in (0..self.layers.len()).rev() {
            let rec = &self.layers[l];
            grad.weights[l] = g.dot(&rec.input.t()).as_standard_layout().into_owned();
            grad.biases[l] = g.slice(s![.., ..np]).sum_axis(Axis(1));
            if l == 0 {
                break;
            }
            let mut g_in = params.weights[l].t().dot(&g);
            let below = &self.layers[l - 1];
            let pre = below.pre.as_ref().expect("hidden layer keeps pre-activations");
            tanh_jets_adjoint(&mut g_in, &rec.input, pre, np, nj);
            g = g_in;
        }
        grad
    }
}

/// A weighted loss contribution with a name used for error reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NamedTerm {
    pub name: &'static str,
    pub value: f64,
}

/// Value and parameter gradient of a scalar objective of one network.
#[derive(Debug, Clone)]
pub struct Gradient {
    pub loss: f64,
    pub grad: NetworkParams,
}

/// Differentiates a scalar objective built from network outputs at `points`.
///
/// `objective` receives the outputs and returns the loss terms (summed into
/// the loss) together with the adjoint seed of their sum.
pub fn grad<F>(params: &NetworkParams, points: &PointSet, objective: F) -> Result<Gradient, AutodiffError>
where
    F: FnOnce(&Outputs) -> (Vec<NamedTerm>, Seed),
{
    let tape = Tape::forward(params, points)?;
    let (terms, seed) = objective(tape.outputs());
    let mut loss = 0.0;
    for term in &terms {
        if !term.value.is_finite() {
            return Err(AutodiffError::NonFinite { term: term.name });
        }
        loss += term.value;
    }
    if seed.data.iter().any(|g| !g.is_finite()) {
        return Err(AutodiffError::NonFinite { term: "seed" });
    }
    Ok(Gradient {
        loss,
        grad: tape.backward(params, &seed),
    })
}

/// Sums a gradient scaled by `factor` into `acc`.
pub fn accumulate(acc: &mut NetworkParams, g: &NetworkParams, factor: f64) {
    for (a, b) in acc.weights.iter_mut().zip(&g.weights) {
        Zip::from(a).and(b).for_each(|a, &b| *a += factor * b);
    }
    for (a, b) in acc.biases.iter_mut().zip(&g.biases) {
        Zip::from(a).and(b).for_each(|a, &b| *a += factor * b);
    }
}

/// Values of one output head at every point.
pub fn head_values(outputs: &Outputs, head: usize) -> Array1<f64> {
    outputs.data.slice(s![head, ..outputs.num_points]).to_owned()
}
