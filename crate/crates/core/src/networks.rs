//! Dense `tanh` networks: the wavefunction network (outputs ψ and ν) and the
//! energy network (constant input, outputs E), plus binary checkpoints.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{jet_forward, PointSet, Tape};
use crate::losses::ProblemSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("invalid network shape: {0}")]
    Shape(String),
    #[error("non-finite network output at x = {x}")]
    NonFinite { x: f64 },
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("not a checkpoint file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported checkpoint version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("checkpoint truncated: needed {needed} more bytes")]
    Truncated { needed: usize },
    #[error("checkpoint shape mismatch: {0}")]
    Shape(String),
}

/// Layer dimensions, weights and biases of one dense network.
///
/// `weights[i]` is `layer_dims[i+1] × layer_dims[i]` (row-major) and
/// `biases[i]` has `layer_dims[i+1]` entries. Hidden layers apply `tanh`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub layer_dims: Vec<usize>,
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl NetworkParams {
    pub fn from_layers(weights: Vec<Array2<f64>>, biases: Vec<Array1<f64>>) -> Result<Self, NetworkError> {
        let mut layer_dims = Vec::with_capacity(weights.len() + 1);
        if let Some(w) = weights.first() {
            layer_dims.push(w.ncols());
        }
        layer_dims.extend(weights.iter().map(|w| w.nrows()));
        let p = Self {
            layer_dims,
            weights,
            biases,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn zeros(layer_dims: &[usize]) -> Result<Self, NetworkError> {
        check_dims(layer_dims)?;
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            weights: layer_dims
                .windows(2)
                .map(|d| Array2::zeros((d[1], d[0])))
                .collect(),
            biases: layer_dims[1..].iter().map(|&d| Array1::zeros(d)).collect(),
        })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng>(layer_dims: &[usize], rng: &mut R) -> Result<Self, NetworkError> {
        let mut p = Self::zeros(layer_dims)?;
        for w in &mut p.weights {
            let (fan_out, fan_in) = w.dim();
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            w.mapv_inplace(|_| rng.gen_range(-limit..limit));
        }
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        check_dims(&self.layer_dims)?;
        if self.weights.len() != self.layer_dims.len() - 1 || self.biases.len() != self.weights.len() {
            return Err(NetworkError::Shape(format!(
                "{} weight and {} bias blocks for {} layers",
                self.weights.len(),
                self.biases.len(),
                self.layer_dims.len() - 1
            )));
        }
        for (i, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let want = (self.layer_dims[i + 1], self.layer_dims[i]);
            if w.dim() != want || b.len() != want.0 {
                return Err(NetworkError::Shape(format!(
                    "layer {i}: weights {:?}, bias {}, expected {want:?}",
                    w.dim(),
                    b.len()
                )));
            }
        }
        Ok(())
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.layer_dims).expect("validated dims")
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().expect("nonempty dims")
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn num_params(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    /// Parameters in checkpoint order: per layer, weights row-major then biases.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub fn with_flat(&self, flat: &[f64]) -> Result<Self, NetworkError> {
        if flat.len() != self.num_params() {
            return Err(NetworkError::Shape(format!(
                "{} values for {} parameters",
                flat.len(),
                self.num_params()
            )));
        }
        let mut p = self.zeros_like();
        let mut it = flat.iter().copied();
        for (w, b) in p.weights.iter_mut().zip(p.biases.iter_mut()) {
            w.iter_mut().for_each(|v| *v = it.next().unwrap());
            b.iter_mut().for_each(|v| *v = it.next().unwrap());
        }
        Ok(p)
    }

    /// Mutable views over every parameter block, in checkpoint order.
    pub fn blocks_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| {
                [
                    w.as_slice_mut().expect("standard layout"),
                    b.as_slice_mut().expect("standard layout"),
                ]
            })
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[f64]> {
        self.weights.iter().zip(self.biases.iter()).flat_map(|(w, b)| {
            [
                w.as_slice().expect("standard layout"),
                b.as_slice().expect("standard layout"),
            ]
        })
    }

    pub fn all_finite(&self) -> bool {
        self.blocks().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

fn check_dims(dims: &[usize]) -> Result<(), NetworkError> {
    if dims.len() < 2 {
        return Err(NetworkError::Shape(format!(
            "need at least input and output dims, got {dims:?}"
        )));
    }
    if dims.contains(&0) {
        return Err(NetworkError::Shape(format!("zero-width layer in {dims:?}")));
    }
    Ok(())
}

/// Hidden-layer widths of the two networks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelShape {
    pub psi_hidden: Vec<usize>,
    pub energy_hidden: Vec<usize>,
}

impl ModelShape {
    /// Seven hidden layers of 256 for ψ/ν, four of 256 for the energy.
    pub fn paper() -> Self {
        Self {
            psi_hidden: vec![256; 7],
            energy_hidden: vec![256; 4],
        }
    }

    /// A small shape that trains in minutes on one CPU core.
    pub fn desk() -> Self {
        Self {
            psi_hidden: vec![64; 4],
            energy_hidden: vec![64; 4],
        }
    }

    pub fn psi_dims(&self) -> Vec<usize> {
        let mut d = vec![1];
        d.extend(&self.psi_hidden);
        d.push(2);
        d
    }

    pub fn energy_dims(&self) -> Vec<usize> {
        let mut d = vec![1];
        d.extend(&self.energy_hidden);
        d.push(1);
        d
    }
}

pub const PSI: usize = 0;
pub const NU: usize = 1;

/// The wavefunction network (heads: [`PSI`], [`NU`]) and the energy network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPair {
    pub psi_net: NetworkParams,
    pub energy_net: NetworkParams,
}

/// Everything the losses need at one collocation point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalBundle {
    pub x: f64,
    pub psi: f64,
    pub dpsi: f64,
    pub d2psi: f64,
    pub nu: f64,
    pub dnu: f64,
    pub energy: f64,
}

impl ModelPair {
    pub fn init(shape: &ModelShape, seed: u64) -> Result<Self, NetworkError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self {
            psi_net: NetworkParams::glorot(&shape.psi_dims(), &mut rng)?,
            energy_net: NetworkParams::glorot(&shape.energy_dims(), &mut rng)?,
        })
    }

    pub fn shape(&self) -> ModelShape {
        let hidden = |d: &[usize]| d[1..d.len() - 1].to_vec();
        ModelShape {
            psi_hidden: hidden(&self.psi_net.layer_dims),
            energy_hidden: hidden(&self.energy_net.layer_dims),
        }
    }

    fn check(&self) -> Result<(), NetworkError> {
        if self.psi_net.input_dim() != 1 || self.psi_net.output_dim() != 2 {
            return Err(NetworkError::Shape(format!(
                "wavefunction network must map 1 -> 2, got {:?}",
                self.psi_net.layer_dims
            )));
        }
        if self.energy_net.input_dim() != 1 || self.energy_net.output_dim() != 1 {
            return Err(NetworkError::Shape(format!(
                "energy network must map 1 -> 1, got {:?}",
                self.energy_net.layer_dims
            )));
        }
        Ok(())
    }

    /// The energy guess (the energy network fed the constant 1).
    pub fn energy(&self) -> Result<f64, NetworkError> {
        self.check()?;
        let e = jet_forward(&self.energy_net, 1.0)
            .map_err(|e| NetworkError::Shape(e.to_string()))?[0]
            .value;
        if !e.is_finite() {
            return Err(NetworkError::NonFinite { x: 1.0 });
        }
        Ok(e)
    }

    pub fn evaluate(&self, x: f64) -> Result<EvalBundle, NetworkError> {
        let energy = self.energy()?;
        let out = jet_forward(&self.psi_net, x).map_err(|e| NetworkError::Shape(e.to_string()))?;
        let (psi, nu) = (out[PSI], out[NU]);
        if !psi.is_finite() || !nu.is_finite() {
            return Err(NetworkError::NonFinite { x });
        }
        Ok(EvalBundle {
            x,
            psi: psi.value,
            dpsi: psi.d1,
            d2psi: psi.d2,
            nu: nu.value,
            dnu: nu.d1,
            energy,
        })
    }

    /// Batched [`evaluate`](Self::evaluate).
    pub fn evaluate_many(&self, xs: &[f64]) -> Result<Vec<EvalBundle>, NetworkError> {
        let energy = self.energy()?;
        let tape = Tape::forward(&self.psi_net, &PointSet::new(xs, &[]))
            .map_err(|e| NetworkError::Shape(e.to_string()))?;
        let out = tape.outputs();
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let (psi, nu) = (out.jet(PSI, i), out.jet(NU, i));
                if !psi.is_finite() || !nu.is_finite() {
                    return Err(NetworkError::NonFinite { x });
                }
                Ok(EvalBundle {
                    x,
                    psi: psi.value,
                    dpsi: psi.d1,
                    d2psi: psi.d2,
                    nu: nu.value,
                    dnu: nu.d1,
                    energy,
                })
            })
            .collect()
    }

    /// ψ alone at many points, without derivative columns.
    pub fn psi_values(&self, xs: &[f64]) -> Result<Vec<f64>, NetworkError> {
        let tape = Tape::forward(&self.psi_net, &PointSet::values_only(xs))
            .map_err(|e| NetworkError::Shape(e.to_string()))?;
        let out = tape.outputs();
        (0..xs.len())
            .map(|i| {
                let v = out.value(PSI, i);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(NetworkError::NonFinite { x: xs[i] })
                }
            })
            .collect()
    }
}

const MAGIC: &[u8; 8] = b"SCHRCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

/// `<run_dir>/ckpt_n<n>_lambda<λ>.bin`
pub fn checkpoint_path(run_dir: &Path, n: usize, lambda: f64) -> PathBuf {
    run_dir.join(format!("ckpt_n{n}_lambda{lambda}.bin"))
}

fn put_net(buf: &mut Vec<u8>, net: &NetworkParams) {
    buf.extend((net.layer_dims.len() as u32).to_le_bytes());
    for &d in &net.layer_dims {
        buf.extend((d as u32).to_le_bytes());
    }
}

fn put_params(buf: &mut Vec<u8>, net: &NetworkParams) {
    for v in net.flatten() {
        buf.extend(v.to_le_bytes());
    }
}

/// Serializes a model and its problem metadata.
///
/// Layout (little-endian): magic `SCHRCKPT`, `u32` version, metadata
/// (`omega_sq`, `lambda` as f64, `n` as u32, `s` as i32, `half_width`,
/// `e_init`, `a` as f64), then per network a `u32` layer count and `u32`
/// dims, then the f64 parameters of the ψ network followed by those of the
/// energy network, each in layer order with weights row-major before biases.
pub fn encode_checkpoint(model: &ModelPair, spec: &ProblemSpec) -> Vec<u8> {
    let mut buf = Vec::with_capacity(64 + 8 * (model.psi_net.num_params() + model.energy_net.num_params()));
    buf.extend(MAGIC);
    buf.extend(CHECKPOINT_VERSION.to_le_bytes());
    buf.extend(spec.omega_sq.to_le_bytes());
    buf.extend(spec.lambda.to_le_bytes());
    buf.extend((spec.n as u32).to_le_bytes());
    buf.extend(spec.s.to_le_bytes());
    buf.extend(spec.half_width.to_le_bytes());
    buf.extend(spec.e_init.to_le_bytes());
    buf.extend(spec.a.to_le_bytes());
    put_net(&mut buf, &model.psi_net);
    put_net(&mut buf, &model.energy_net);
    put_params(&mut buf, &model.psi_net);
    put_params(&mut buf, &model.energy_net);
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], CheckpointError> {
        let end = self.pos + N;
        if end > self.bytes.len() {
            return Err(CheckpointError::Truncated {
                needed: end - self.bytes.len(),
            });
        }
        let out = self.bytes[self.pos..end].try_into().unwrap();
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn i32(&mut self) -> Result<i32, CheckpointError> {
        Ok(i32::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take()?))
    }

    fn dims(&mut self) -> Result<Vec<usize>, CheckpointError> {
        let count = self.u32()? as usize;
        if count < 2 || count > 64 {
            return Err(CheckpointError::Shape(format!("implausible layer count {count}")));
        }
        (0..count).map(|_| Ok(self.u32()? as usize)).collect()
    }

    fn params(&mut self, dims: &[usize]) -> Result<NetworkParams, CheckpointError> {
        let template = NetworkParams::zeros(dims).map_err(|e| CheckpointError::Shape(e.to_string()))?;
        let needed = template.num_params() * 8;
        if self.pos + needed > self.bytes.len() {
            return Err(CheckpointError::Truncated {
                needed: self.pos + needed - self.bytes.len(),
            });
        }
        let flat: Vec<f64> = (0..template.num_params())
            .map(|_| self.f64())
            .collect::<Result<_, _>>()?;
        template
            .with_flat(&flat)
            .map_err(|e| CheckpointError::Shape(e.to_string()))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(ModelPair, ProblemSpec), CheckpointError> {
    if bytes.len() < MAGIC.len() {
        return Err(CheckpointError::Truncated {
            needed: MAGIC.len() - bytes.len(),
        });
    }
    if &bytes[..MAGIC.len()] != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let mut r = Reader {
        bytes,
        pos: MAGIC.len(),
    };
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::Version {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let spec = ProblemSpec {
        omega_sq: r.f64()?,
        lambda: r.f64()?,
        n: r.u32()? as usize,
        s: r.i32()?,
        half_width: r.f64()?,
        e_init: r.f64()?,
        a: r.f64()?,
    };
    let psi_dims = r.dims()?;
    let energy_dims = r.dims()?;
    let model = ModelPair {
        psi_net: r.params(&psi_dims)?,
        energy_net: r.params(&energy_dims)?,
    };
    if r.pos != bytes.len() {
        return Err(CheckpointError::Shape(format!(
            "{} trailing bytes after parameters",
            bytes.len() - r.pos
        )));
    }
    model.check().map_err(|e| CheckpointError::Shape(e.to_string()))?;
    Ok((model, spec))
}

pub fn save_checkpoint(model: &ModelPair, spec: &ProblemSpec, path: &Path) -> Result<(), CheckpointError> {
    let io = |source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(&encode_checkpoint(model, spec)).map_err(io)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(ModelPair, ProblemSpec), CheckpointError> {
    let bytes = fs::read(path).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_checkpoint(&bytes)
}

/// Loads a checkpoint and checks it matches the expected network shape.
pub fn load_checkpoint_as(path: &Path, shape: &ModelShape) -> Result<(ModelPair, ProblemSpec), CheckpointError> {
    let (model, spec) = load_checkpoint(path)?;
    let found = model.shape();
    if &found != shape {
        return Err(CheckpointError::Shape(format!(
            "checkpoint has {found:?}, expected {shape:?}"
        )));
    }
    Ok((model, spec))
}
