//! The training loop, the excited-state cascade and λ-sweep transfer.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{AutodiffError, PointSet, Tape};
use crate::losses::{
    objective, parity_sign, ArchivedState, EndValues, LossBreakdown, ObjectiveInputs, ProblemError, ProblemSpec,
    Scenario, ScheduleState, StateArchive, WeightSchedule,
};
use crate::metrics::{fidelity, FidelityConfig, MetricsError, Wavefunction};
use crate::networks::{load_checkpoint_as, CheckpointError, EvalBundle, ModelPair, ModelShape, NetworkError, NU, PSI};
use crate::optim::{Adam, AdamConfig};
use crate::sampling::{BatchSampler, BatchSpec};

/// Points in the dense snapshot of a converged state.
pub const SNAPSHOT_POINTS: usize = 2048;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("state n={n} needs archived states 0..{n}, archive holds {held:?}")]
    MissingArchive { n: usize, held: Vec<usize> },
    #[error("non-finite {term} at epoch {epoch}")]
    NonFinite {
        term: String,
        epoch: usize,
        /// Every finite epoch before the failure.
        trace: Box<TrainTrace>,
    },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Learning rate is multiplied by this every `lr_decay_epochs`.
    pub lr_decay_factor: f64,
    pub lr_decay_epochs: usize,
    pub max_epochs: usize,
    pub total_loss_threshold: f64,
    pub eq_loss_threshold: f64,
    /// Equation threshold used instead when `scenario` is transfer.
    pub transfer_eq_loss_threshold: f64,
    /// Set from the run-level seed, not from the training table.
    #[serde(skip)]
    pub seed: u64,
    pub transfer_from: Option<PathBuf>,
    pub scenario: Scenario,
    pub schedule: WeightSchedule,
    pub batch_size: usize,
    pub jitter_fraction: f64,
    pub shape: ModelShape,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            lr_decay_factor: 0.5,
            lr_decay_epochs: 20_000,
            max_epochs: 200_000,
            total_loss_threshold: 5e-2,
            eq_loss_threshold: 4e-4,
            transfer_eq_loss_threshold: 2e-5,
            seed: 0,
            transfer_from: None,
            scenario: Scenario::Fresh,
            schedule: WeightSchedule::default(),
            batch_size: 512,
            jitter_fraction: 0.5,
            shape: ModelShape::paper(),
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    /// 4×64 networks, relaxed thresholds and a compressed schedule so a
    /// harmonic state trains in a few minutes on one CPU core.
    ///
    /// The energy loss starts at 10 rather than 100: with small networks the
    /// stronger push drives E far below the spectrum, where only ψ = 0 fits
    /// the equation, and training stalls on that trivial solution.
    pub fn desk() -> Self {
        Self {
            learning_rate: 2e-3,
            lr_decay_epochs: 4_000,
            max_epochs: 20_000,
            total_loss_threshold: 0.1,
            eq_loss_threshold: 1e-3,
            transfer_eq_loss_threshold: 1e-4,
            batch_size: 256,
            schedule: WeightSchedule {
                equation_ramp_epochs: 2_000,
                energy_start: 10.0,
                energy_decay_epochs: 2_000,
                ..WeightSchedule::default()
            },
            shape: ModelShape::desk(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: String| Err(TrainError::Config(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be at least 1".into());
        }
        for (name, v) in [
            ("total_loss_threshold", self.total_loss_threshold),
            ("eq_loss_threshold", self.eq_loss_threshold),
            ("transfer_eq_loss_threshold", self.transfer_eq_loss_threshold),
        ] {
            if !(v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.batch_size < 2 {
            return bad(format!("batch_size must be at least 2, got {}", self.batch_size));
        }
        if !(0.0..=0.5).contains(&self.jitter_fraction) {
            return bad(format!("jitter_fraction must lie in [0, 0.5], got {}", self.jitter_fraction));
        }
        if !(self.lr_decay_factor > 0.0 && self.lr_decay_factor <= 1.0) {
            return bad(format!("lr_decay_factor must lie in (0, 1], got {}", self.lr_decay_factor));
        }
        Ok(())
    }

    /// Same settings switched to transfer weights.
    pub fn for_transfer(&self) -> Self {
        Self {
            scenario: Scenario::Transfer,
            ..self.clone()
        }
    }

    pub fn active_eq_threshold(&self) -> f64 {
        match self.scenario {
            Scenario::Fresh => self.eq_loss_threshold,
            Scenario::Transfer => self.transfer_eq_loss_threshold,
        }
    }

    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        if self.lr_decay_epochs == 0 {
            return self.learning_rate;
        }
        self.learning_rate * self.lr_decay_factor.powi((epoch / self.lr_decay_epochs) as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub losses: LossBreakdown,
    pub energy: f64,
    pub fidelity: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub records: Vec<EpochRecord>,
    pub converged_epoch: Option<usize>,
}

impl TrainTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn converged(&self) -> bool {
        self.converged_epoch.is_some()
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }
}

/// Reference state scored every `every` epochs, outside the update.
pub struct Validation<'a> {
    pub reference: &'a dyn Wavefunction,
    pub every: usize,
    pub fidelity: FidelityConfig,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub spec: ProblemSpec,
    pub model: ModelPair,
    pub trace: TrainTrace,
}

impl TrainOutcome {
    pub fn converged(&self) -> bool {
        self.trace.converged()
    }

    pub fn energy(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |r| r.energy)
    }

    pub fn final_losses(&self) -> LossBreakdown {
        self.trace.last().map(|r| r.losses).unwrap_or_default()
    }

    /// ψ on [`SNAPSHOT_POINTS`] uniform points spanning the domain.
    pub fn snapshot(&self) -> Result<ArchivedState, NetworkError> {
        let grid = uniform_grid(self.spec.half_width, SNAPSHOT_POINTS);
        let values = self.model.psi_values(&grid)?;
        Ok(ArchivedState::new(self.spec.n, self.energy(), grid, values))
    }
}

pub fn uniform_grid(half_width: f64, points: usize) -> Vec<f64> {
    let dx = 2.0 * half_width / (points - 1) as f64;
    (0..points).map(|i| -half_width + i as f64 * dx).collect()
}

/// Losses and parameter gradients for one batch.
pub struct StepEvaluation {
    pub losses: LossBreakdown,
    pub energy: f64,
    pub psi_grad: crate::networks::NetworkParams,
    pub energy_grad: crate::networks::NetworkParams,
}

fn autodiff_err(e: AutodiffError) -> NetworkError {
    NetworkError::Shape(e.to_string())
}

/// Evaluates the weighted objective on `xs` and back-propagates it into
/// both networks.
pub fn evaluate_step(
    model: &ModelPair,
    spec: &ProblemSpec,
    xs: &[f64],
    archived: &[Vec<f64>],
    schedule: &WeightSchedule,
    state: ScheduleState,
) -> Result<StepEvaluation, NetworkError> {
    let m = xs.len();
    let h = spec.half_width;
    let mut value_points: Vec<f64> = xs.iter().map(|x| -x).collect();
    value_points.extend([-h, h]);
    let points = PointSet::new(xs, &value_points);
    let psi_tape = Tape::forward(&model.psi_net, &points).map_err(autodiff_err)?;
    let energy_tape = Tape::forward(&model.energy_net, &PointSet::values_only(&[1.0])).map_err(autodiff_err)?;
    let out = psi_tape.outputs();
    let energy = energy_tape.outputs().value(0, 0);

    let batch: Vec<EvalBundle> = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let (psi, nu) = (out.jet(PSI, i), out.jet(NU, i));
            EvalBundle {
                x,
                psi: psi.value,
                dpsi: psi.d1,
                d2psi: psi.d2,
                nu: nu.value,
                dnu: nu.d1,
                energy,
            }
        })
        .collect();
    let mirrored: Vec<f64> = (0..m).map(|i| out.value(PSI, m + i)).collect();
    let ends = EndValues {
        psi_left: out.value(PSI, 2 * m),
        psi_right: out.value(PSI, 2 * m + 1),
        nu_left: out.value(NU, 2 * m),
        nu_right: out.value(NU, 2 * m + 1),
    };
    let inputs = ObjectiveInputs {
        batch: &batch,
        mirrored_psi: &mirrored,
        ends,
        energy,
        archived,
    };
    let (losses, adj) = objective(&inputs, spec, schedule.weights(spec.n, state));

    let mut seed = out.zero_seed();
    for (i, a) in adj.batch.iter().enumerate() {
        seed.add_value(PSI, i, a.psi);
        seed.add_d2(PSI, i, a.d2psi);
        seed.add_d1(NU, i, a.dnu);
        seed.add_value(PSI, m + i, adj.mirrored_psi[i]);
    }
    seed.add_value(PSI, 2 * m, adj.ends.psi_left);
    seed.add_value(PSI, 2 * m + 1, adj.ends.psi_right);
    seed.add_value(NU, 2 * m, adj.ends.nu_left);
    seed.add_value(NU, 2 * m + 1, adj.ends.nu_right);
    let psi_grad = psi_tape.backward(&model.psi_net, &seed);

    let mut e_seed = energy_tape.outputs().zero_seed();
    e_seed.add_value(0, 0, adj.energy);
    let energy_grad = energy_tape.backward(&model.energy_net, &e_seed);

    Ok(StepEvaluation {
        losses,
        energy,
        psi_grad,
        energy_grad,
    })
}

/// Optimizer state for both networks.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    pub psi: Adam,
    pub energy: Adam,
}

impl Optimizer {
    pub fn new(model: &ModelPair, config: AdamConfig) -> Self {
        Self {
            psi: Adam::new(&model.psi_net, config),
            energy: Adam::new(&model.energy_net, config),
        }
    }

    pub fn apply(&mut self, model: &mut ModelPair, step: &StepEvaluation, lr: f64) {
        self.psi.step(&mut model.psi_net, &step.psi_grad, lr);
        self.energy.step(&mut model.energy_net, &step.energy_grad, lr);
    }
}

fn check_archive(spec: &ProblemSpec, archive: &StateArchive) -> Result<(), TrainError> {
    if archive.holds_states_below(spec.n) {
        Ok(())
    } else {
        Err(TrainError::MissingArchive {
            n: spec.n,
            held: archive.states.iter().map(|s| s.n).collect(),
        })
    }
}

/// Trains one state. Starts from `cfg.transfer_from` when set, else from a
/// fresh initialization with `cfg.seed`.
pub fn train_state(spec: &ProblemSpec, cfg: &TrainConfig, archive: &StateArchive) -> Result<TrainOutcome, TrainError> {
    let init = match &cfg.transfer_from {
        Some(path) => load_checkpoint_as(path, &cfg.shape)?.0,
        None => ModelPair::init(&cfg.shape, cfg.seed)?,
    };
    train_from(spec, cfg, archive, init, None)
}

/// Trains one state starting from `init`.
///
/// Stops at the first epoch whose batch meets both thresholds; the returned
/// model is the one that produced that batch's losses.
pub fn train_from(
    spec: &ProblemSpec,
    cfg: &TrainConfig,
    archive: &StateArchive,
    init: ModelPair,
    validation: Option<&Validation<'_>>,
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    spec.validate()?;
    check_archive(spec, archive)?;
    let mut model = init;
    let mut opt = Optimizer::new(&model, cfg.adam);
    let mut sampler = BatchSampler::new(
        BatchSpec {
            count: cfg.batch_size,
            half_width: spec.half_width,
            jitter_fraction: cfg.jitter_fraction,
        },
        cfg.seed.wrapping_add(0x5eed),
    );
    let eq_threshold = cfg.active_eq_threshold();
    let mut trace = TrainTrace::default();

    for epoch in 0..cfg.max_epochs {
        let xs = sampler.sample();
        let archived = archive.normalized_on(&xs);
        let state = ScheduleState {
            epoch,
            scenario: cfg.scenario,
        };
        let step = evaluate_step(&model, spec, &xs, &archived, &cfg.schedule, state)?;
        let bad = step
            .losses
            .non_finite_term()
            .or_else(|| (!step.energy.is_finite()).then_some("energy"))
            .or_else(|| (!step.losses.total.is_finite()).then_some("total"));
        if let Some(term) = bad {
            return Err(TrainError::NonFinite {
                term: term.to_string(),
                epoch,
                trace: Box::new(trace),
            });
        }
        let fid = match validation {
            Some(v) if v.every > 0 && epoch % v.every == 0 => {
                Some(fidelity(v.reference, &model, spec.half_width, v.fidelity)?.mean)
            }
            _ => None,
        };
        trace.records.push(EpochRecord {
            epoch,
            losses: step.losses,
            energy: step.energy,
            fidelity: fid,
        });
        if step.losses.total < cfg.total_loss_threshold && step.losses.equation < eq_threshold {
            trace.converged_epoch = Some(epoch);
            break;
        }
        if !(step.psi_grad.all_finite() && step.energy_grad.all_finite()) {
            return Err(TrainError::NonFinite {
                term: "gradient".into(),
                epoch,
                trace: Box::new(trace),
            });
        }
        opt.apply(&mut model, &step, cfg.learning_rate_at(epoch));
    }
    Ok(TrainOutcome {
        spec: *spec,
        model,
        trace,
    })
}

/// Potential family shared by every state of a cascade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Family {
    pub omega_sq: f64,
    pub lambda: f64,
    /// Overrides the computed domain half-width for every state.
    pub half_width: Option<f64>,
    /// Ground-state E_init override.
    pub e_init: Option<f64>,
    /// Energy-loss steepness override.
    pub a: Option<f64>,
}

impl Family {
    pub fn new(omega_sq: f64, lambda: f64) -> Self {
        Self {
            omega_sq,
            lambda,
            half_width: None,
            e_init: None,
            a: None,
        }
    }

    /// Spec for state `n`; `previous_energy` is the energy of state `n - 1`.
    pub fn spec(&self, n: usize, previous_energy: Option<f64>) -> ProblemSpec {
        let mut spec = ProblemSpec::new(self.omega_sq, self.lambda, n);
        if let Some(h) = self.half_width {
            spec.half_width = h;
        }
        if let Some(a) = self.a {
            spec.a = a;
        }
        match previous_energy {
            Some(e) => spec.e_init = e,
            None => {
                if let Some(e) = self.e_init {
                    spec.e_init = e;
                }
            }
        }
        spec.s = parity_sign(n);
        spec
    }
}

#[derive(Debug, Clone)]
pub struct CascadeResult {
    pub outcomes: Vec<TrainOutcome>,
    pub archive: StateArchive,
}

impl CascadeResult {
    pub fn converged(&self) -> bool {
        self.outcomes.last().is_some_and(|o| o.converged())
    }
}

/// Trains `n = 0..=n_max` in order, archiving each converged state for the
/// orthogonality loss of the next. Stops at the first state that does not
/// converge; `on_state` sees every finished state.
pub fn train_cascade(
    family: &Family,
    cfg: &TrainConfig,
    n_max: usize,
    mut on_state: impl FnMut(&TrainOutcome) -> Result<(), TrainError>,
) -> Result<CascadeResult, TrainError> {
    let mut result = CascadeResult {
        outcomes: Vec::new(),
        archive: StateArchive::new(),
    };
    let mut previous = None;
    for n in 0..=n_max {
        let spec = family.spec(n, previous);
        let state_cfg = TrainConfig {
            seed: cfg.seed.wrapping_add(n as u64),
            ..cfg.clone()
        };
        let init = match &cfg.transfer_from {
            Some(path) => load_checkpoint_as(path, &cfg.shape)?.0,
            None => ModelPair::init(&cfg.shape, state_cfg.seed)?,
        };
        let outcome = train_from(&spec, &state_cfg, &result.archive, init, None)?;
        on_state(&outcome)?;
        let done = outcome.converged();
        if done {
            previous = Some(outcome.energy());
            result.archive.push(outcome.snapshot()?);
        }
        result.outcomes.push(outcome);
        if !done {
            break;
        }
    }
    Ok(result)
}

/// Result at one λ of a sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub lambda: f64,
    pub outcomes: Vec<TrainOutcome>,
}

impl SweepPoint {
    pub fn converged(&self) -> bool {
        self.outcomes.iter().all(TrainOutcome::converged)
    }
}

/// Converged models from earlier λ values, per state.
#[derive(Debug, Clone, Default)]
pub struct SolvedModels {
    by_state: Vec<Vec<(f64, ModelPair)>>,
}

impl SolvedModels {
    pub fn insert(&mut self, n: usize, lambda: f64, model: ModelPair) {
        if self.by_state.len() <= n {
            self.by_state.resize(n + 1, Vec::new());
        }
        self.by_state[n].push((lambda, model));
    }

    /// Model of state `n` at the solved λ nearest to `lambda`.
    pub fn nearest(&self, n: usize, lambda: f64) -> Option<&ModelPair> {
        self.by_state
            .get(n)?
            .iter()
            .min_by(|a, b| (a.0 - lambda).abs().total_cmp(&(b.0 - lambda).abs()))
            .map(|(_, m)| m)
    }
}

/// Solves states `0..base.len()` at every λ in ascending order. Each run
/// starts from the converged model of the same state at the nearest λ
/// already solved, or from `base[n]` when none is, and uses transfer
/// weights. Lower states at the same λ feed the orthogonality loss. A state
/// that does not converge ends that λ; later λ values still run.
pub fn sweep_lambda(
    family: &dyn Fn(f64) -> Family,
    lambdas: &[f64],
    base: &[ModelPair],
    cfg: &TrainConfig,
    solved: &mut SolvedModels,
    mut on_point: impl FnMut(&SweepPoint) -> Result<(), TrainError>,
) -> Result<Vec<SweepPoint>, TrainError> {
    if base.is_empty() {
        return Err(TrainError::Config("sweep needs at least one base model".into()));
    }
    let mut sorted = lambdas.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    if let Some(&l) = sorted.iter().find(|l| !(**l > 0.0)) {
        return Err(TrainError::Config(format!("sweep λ values must be positive, got {l}")));
    }
    let transfer = cfg.for_transfer();
    let mut points = Vec::new();
    for &lambda in &sorted {
        let fam = family(lambda);
        let mut archive = StateArchive::new();
        let mut outcomes = Vec::new();
        let mut previous = None;
        for (n, seed_model) in base.iter().enumerate() {
            let init = solved.nearest(n, lambda).unwrap_or(seed_model).clone();
            let spec = fam.spec(n, previous);
            let outcome = train_from(&spec, &transfer, &archive, init, None)?;
            if !outcome.converged() {
                outcomes.push(outcome);
                break;
            }
            previous = Some(outcome.energy());
            archive.push(outcome.snapshot()?);
            solved.insert(n, lambda, outcome.model.clone());
            outcomes.push(outcome);
        }
        let point = SweepPoint { lambda, outcomes };
        on_point(&point)?;
        points.push(point);
    }
    Ok(points)
}
