//! The `schrospec` command line.
//!
//! Exit codes: 0 success, 2 configuration error, 3 non-convergence,
//! 4 numeric failure.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::analysis::{analyze, FitResult, Region};
use crate::config::{ConfigError, Format, Preset, RunConfig, Scale};
use crate::io::{
    point_rows, prepare_run_dir, read_csv, write_csv, write_json, write_state_artifacts, write_text, EnergyRow, IoError,
    SummaryRow,
};
use crate::metrics::{energy_error, fidelity, FidelityConfig, OracleState, Wavefunction};
use crate::networks::{checkpoint_path, load_checkpoint_as, save_checkpoint, CheckpointError};
use crate::oracle::{perturbative_energy, solve_reference, diagonalize, HarmonicState, OracleError, OracleSolution};
use crate::trainer::{sweep_lambda, train_cascade, SolvedModels, SweepPoint, TrainError, TrainOutcome};

pub const RUN_DIR_ENV: &str = "SCHROSPEC_RUN_DIR";

#[derive(Debug, Parser)]
#[command(name = "schrospec", version, about = "PINN eigensolver for the 1-D (an)harmonic oscillator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train states n = 0..=n_max in sequence.
    Solve(SolveArgs),
    /// Train every λ of a list by transfer from the nearest solved λ.
    Sweep(SweepArgs),
    /// Reference eigenpairs by grid diagonalization.
    Oracle(OracleArgs),
    /// Score a run against analytic, oracle and perturbative references.
    Compare(CompareArgs),
    /// Log-log scaling fits and crossover points.
    Fit(FitArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Starting preset: harmonic, anharmonic, double-well or quartic.
    #[arg(long, default_value = "harmonic")]
    pub preset: String,
    /// TOML config applied on top of the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// paper or desk.
    #[arg(long)]
    pub scale: Option<String>,
    /// Output directory [default: config, then $SCHROSPEC_RUN_DIR, then runs/<preset>].
    #[arg(long)]
    pub run_dir: Option<PathBuf>,
    /// Replace artifacts in a non-empty run directory.
    #[arg(long)]
    pub force: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub omega_sq: Option<f64>,
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated λ values.
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    /// Directory with the checkpoints that seed the first λ.
    #[arg(long)]
    pub base_dir: Option<PathBuf>,
    /// Continue an interrupted sweep in its run directory.
    #[arg(long, conflicts_with = "force")]
    pub resume: bool,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated λ values [default: the preset's λ].
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    /// Number of states [default: n_max + 1].
    #[arg(long)]
    pub states: Option<usize>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long)]
    pub half_width: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Run directory of a `solve` or `sweep`.
    #[arg(long)]
    pub run_dir: Option<PathBuf>,
    #[arg(long)]
    pub resamples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Energies CSV with columns n,lambda,energy,source[,omega_sq].
    #[arg(long, required_unless_present = "from_oracle")]
    pub input: Option<PathBuf>,
    /// Compute the input from the oracle on the default λ grid instead.
    #[arg(long)]
    pub from_oracle: bool,
    #[arg(long, default_value_t = 5)]
    pub n_max: usize,
    #[arg(long)]
    pub run_dir: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    NotConverged(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) | CliError::Usage(_) => 2,
            CliError::NotConverged(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Config(_) | TrainError::Problem(_) | TrainError::MissingArchive { .. } | TrainError::Checkpoint(_) => {
                CliError::Usage(e.to_string())
            }
            TrainError::NonFinite { .. } | TrainError::Network(_) | TrainError::Metrics(_) => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Invalid(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<CheckpointError> for CliError {
    fn from(e: CheckpointError) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Oracle(a) => cmd_oracle(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Fit(a) => cmd_fit(&a),
    }
}

fn resolve_config(c: &CommonArgs) -> Result<(RunConfig, Preset), CliError> {
    let preset: Preset = c.preset.parse()?;
    let scale = c.scale.as_deref().map(str::parse::<Scale>).transpose()?;
    let text = c
        .config
        .as_ref()
        .map(|p| {
            fs::read_to_string(p).map_err(|source| ConfigError::Read {
                path: p.clone(),
                source,
            })
        })
        .transpose()?;
    let mut cfg = RunConfig::resolve(preset, scale, text.as_deref())?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(w) = c.omega_sq {
        cfg.problem.omega_sq = w;
    }
    if let Some(n) = c.n_max {
        cfg.problem.n_max = n;
    }
    if let Some(m) = c.max_epochs {
        cfg.training.max_epochs = m;
    }
    Ok((cfg, preset))
}

fn finish_config(cfg: RunConfig) -> Result<RunConfig, CliError> {
    cfg.validate()?;
    Ok(cfg.synced())
}

/// Flag, then config, then the environment, then `runs/<preset>`.
pub fn run_dir_for(flag: Option<&Path>, cfg: Option<&RunConfig>, preset: &str) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.and_then(|c| c.output.run_dir.clone()))
        .or_else(|| std::env::var_os(RUN_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs").join(preset))
}

#[derive(Serialize)]
struct RunSummary<'a, T: Serialize> {
    command: &'a str,
    status: &'a str,
    config: &'a RunConfig,
    results: &'a [T],
}

fn write_summaries<T: Serialize>(
    dir: &Path,
    cfg: &RunConfig,
    command: &str,
    status: &str,
    csv_name: &str,
    rows: &[T],
) -> Result<(), CliError> {
    if cfg.output.formats.contains(&Format::Csv) {
        write_csv(&dir.join(csv_name), rows)?;
    }
    if cfg.output.formats.contains(&Format::Json) {
        write_json(
            &dir.join("summary.json"),
            &RunSummary {
                command,
                status,
                config: cfg,
                results: rows,
            },
        )?;
    }
    Ok(())
}

fn save_outcome(dir: &Path, ckpt_dir: &Path, o: &TrainOutcome) -> Result<(), CliError> {
    write_state_artifacts(dir, o)?;
    save_checkpoint(&o.model, &o.spec, &checkpoint_path(ckpt_dir, o.spec.n, o.spec.lambda))?;
    Ok(())
}

fn save_partial_trace(dir: &Path, n: usize, err: &TrainError) -> Result<(), CliError> {
    if let TrainError::NonFinite { trace, .. } = err {
        write_csv(&crate::io::trace_path(dir, n), &crate::io::trace_rows(trace))?;
    }
    Ok(())
}

pub fn cmd_solve(a: &SolveArgs) -> Result<(), CliError> {
    let (mut cfg, preset) = resolve_config(&a.common)?;
    if let Some(l) = a.lambda {
        cfg.problem.lambda = l;
    }
    let cfg = finish_config(cfg)?;
    let dir = run_dir_for(a.common.run_dir.as_deref(), Some(&cfg), preset.name());
    prepare_run_dir(&dir, a.common.force)?;
    write_text(&dir.join("config.toml"), &cfg.to_toml())?;

    let family = cfg.problem.family(cfg.problem.lambda);
    let mut rows = Vec::new();
    let mut current_n = 0;
    let result = train_cascade(&family, &cfg.training, cfg.problem.n_max, |o| {
        current_n = o.spec.n + 1;
        rows.push(SummaryRow::from_outcome(o));
        save_outcome(&dir, &dir, o).map_err(|e| TrainError::Config(e.to_string()))?;
        println!(
            "n={} E={} converged={} epochs={}",
            o.spec.n,
            o.energy(),
            o.converged(),
            o.trace.len()
        );
        Ok(())
    });
    let result = match result {
        Ok(r) => r,
        Err(e) => {
            save_partial_trace(&dir, current_n, &e)?;
            write_summaries(&dir, &cfg, "solve", "failed", "summary.csv", &rows)?;
            return Err(e.into());
        }
    };
    let ok = result.outcomes.len() == cfg.problem.n_max + 1 && result.converged();
    write_summaries(&dir, &cfg, "solve", if ok { "converged" } else { "not_converged" }, "summary.csv", &rows)?;
    if ok {
        Ok(())
    } else {
        Err(CliError::NotConverged(format!(
            "state n={} did not converge; partial artifacts in {}",
            result.outcomes.len() - 1,
            dir.display()
        )))
    }
}

/// Checkpoints named `ckpt_n{n}_lambda{λ}.bin` in `dir`, as (n, λ, path).
fn list_checkpoints(dir: &Path) -> Result<Vec<(usize, f64, PathBuf)>, CliError> {
    let entries = fs::read_dir(dir).map_err(|source| IoError::Fs {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for entry in entries.flatten() {
        let name = entry.file_name().to_string_lossy().into_owned();
        let Some(rest) = name.strip_prefix("ckpt_n").and_then(|r| r.strip_suffix(".bin")) else {
            continue;
        };
        let Some((n, lambda)) = rest.split_once("_lambda") else {
            continue;
        };
        if let (Ok(n), Ok(lambda)) = (n.parse::<usize>(), lambda.parse::<f64>()) {
            out.push((n, lambda, entry.path()));
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Ok(out)
}

fn lambda_dir(dir: &Path, lambda: f64) -> PathBuf {
    dir.join(format!("lambda_{lambda}"))
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<(), CliError> {
    let (mut cfg, preset) = resolve_config(&a.common)?;
    if let Some(ls) = &a.lambdas {
        cfg.problem.lambdas = ls.clone();
    }
    if let Some(b) = &a.base_dir {
        cfg.sweep.base_dir = Some(b.clone());
    }
    let cfg = finish_config(cfg)?;
    let dir = run_dir_for(a.common.run_dir.as_deref(), Some(&cfg), preset.name());
    let base_dir = cfg
        .sweep
        .base_dir
        .clone()
        .ok_or_else(|| CliError::Usage("sweep needs base checkpoints: pass --base-dir or set sweep.base_dir".into()))?;
    let first = cfg.problem.lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let available = list_checkpoints(&base_dir)?;
    let mut base = Vec::new();
    for n in 0..=cfg.problem.n_max {
        let (_, _, path) = available
            .iter()
            .filter(|c| c.0 == n)
            .min_by(|x, y| (x.1 - first).abs().total_cmp(&(y.1 - first).abs()))
            .ok_or_else(|| CliError::Usage(format!("no base checkpoint for n={n} in {}", base_dir.display())))?;
        base.push(load_checkpoint_as(path, &cfg.training.shape)?.0);
    }

    let summary_path = dir.join("sweep_summary.csv");
    let mut rows: Vec<SummaryRow> = Vec::new();
    let mut solved = SolvedModels::default();
    let mut todo = cfg.problem.lambdas.clone();
    if a.resume && summary_path.exists() {
        rows = read_csv(&summary_path)?;
        for row in rows.iter().filter(|r| r.converged) {
            let (model, _) = load_checkpoint_as(&checkpoint_path(&dir, row.n, row.lambda), &cfg.training.shape)?;
            solved.insert(row.n, row.lambda, model);
        }
        todo.retain(|l| !rows.iter().any(|r| r.lambda == *l));
        println!("resuming: {} λ values left", todo.len());
    } else {
        prepare_run_dir(&dir, a.common.force)?;
    }
    write_text(&dir.join("config.toml"), &cfg.to_toml())?;

    let problem = cfg.problem.clone();
    let family = move |l: f64| problem.family(l);
    let mut any_failed = rows.iter().any(|r| !r.converged);
    let result = sweep_lambda(&family, &todo, &base, &cfg.training, &mut solved, |p: &SweepPoint| {
        let sub = lambda_dir(&dir, p.lambda);
        let io = |e: CliError| TrainError::Config(e.to_string());
        fs::create_dir_all(&sub).map_err(|e| TrainError::Config(format!("{}: {e}", sub.display())))?;
        for o in &p.outcomes {
            save_outcome(&sub, &dir, o).map_err(io)?;
            rows.push(SummaryRow::from_outcome(o));
        }
        any_failed |= !p.converged() || p.outcomes.len() < base.len();
        write_csv(&summary_path, &rows).map_err(|e| io(e.into()))?;
        println!("λ={} converged={}", p.lambda, p.converged());
        Ok(())
    });
    if let Err(e) = result {
        write_summaries(&dir, &cfg, "sweep", "failed", "sweep_summary.csv", &rows)?;
        return Err(e.into());
    }
    let status = if any_failed { "not_converged" } else { "converged" };
    write_summaries(&dir, &cfg, "sweep", status, "sweep_summary.csv", &rows)?;
    if any_failed {
        return Err(CliError::NotConverged(format!("some λ did not converge; see {}", summary_path.display())));
    }
    Ok(())
}

pub fn cmd_oracle(a: &OracleArgs) -> Result<(), CliError> {
    let (mut cfg, preset) = resolve_config(&a.common)?;
    if let Some(g) = a.grid_points {
        cfg.oracle.grid_points = g;
    }
    if let Some(h) = a.half_width {
        cfg.oracle.half_width = Some(h);
    }
    let cfg = finish_config(cfg)?;
    let lambdas = a.lambdas.clone().unwrap_or_else(|| vec![cfg.problem.lambda]);
    let states = a.states.unwrap_or(cfg.problem.n_max + 1);
    if states == 0 {
        return Err(CliError::Usage("--states must be at least 1".into()));
    }
    let dir = run_dir_for(a.common.run_dir.as_deref(), Some(&cfg), preset.name());
    prepare_run_dir(&dir, a.common.force)?;
    write_text(&dir.join("config.toml"), &cfg.to_toml())?;

    let mut rows = Vec::new();
    for &lambda in &lambdas {
        let sol = oracle_solution(&cfg, cfg.problem.omega_sq, lambda, states)?;
        for (n, &energy) in sol.energies.iter().enumerate() {
            rows.push(EnergyRow {
                n,
                lambda,
                energy,
                source: "oracle".into(),
                omega_sq: cfg.problem.omega_sq,
            });
            write_csv(
                &dir.join(format!("oracle_state_n{n}_lambda{lambda}.csv")),
                &point_rows(&sol.grid, &sol.wavefunctions[n]),
            )?;
        }
        println!("λ={lambda} energies={:?}", sol.energies);
    }
    write_summaries(&dir, &cfg, "oracle", "ok", "energies.csv", &rows)
}

fn oracle_solution(cfg: &RunConfig, omega_sq: f64, lambda: f64, states: usize) -> Result<OracleSolution, CliError> {
    Ok(match cfg.oracle.half_width {
        Some(x) => diagonalize(omega_sq, lambda, x, cfg.oracle.grid_points, states)?,
        None => solve_reference(omega_sq, lambda, states, cfg.oracle.grid_points)?,
    })
}

/// One line of `compare.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct CompareRow {
    pub n: usize,
    pub lambda: f64,
    pub omega_sq: f64,
    pub e_pinn: f64,
    pub e_ref: f64,
    pub reference: String,
    pub err_e: f64,
    pub fidelity_mean: f64,
    pub fidelity_std: f64,
    /// Perturbative energy, only for ω² = 1.
    pub e_pert: Option<f64>,
    pub err_pert: Option<f64>,
}

pub fn cmd_compare(a: &CompareArgs) -> Result<(), CliError> {
    let dir = run_dir_for(a.run_dir.as_deref(), None, "harmonic");
    let cfg_text = fs::read_to_string(dir.join("config.toml")).map_err(|source| ConfigError::Read {
        path: dir.join("config.toml"),
        source,
    })?;
    let mut cfg = RunConfig::resolve(Preset::Harmonic, None, Some(&cfg_text))?;
    if let Some(r) = a.resamples {
        cfg.output.resamples = r;
    }
    let cfg = finish_config(cfg)?;
    let summary = ["summary.csv", "sweep_summary.csv"]
        .iter()
        .map(|f| dir.join(f))
        .find(|p| p.exists())
        .ok_or_else(|| CliError::Usage(format!("{} holds no run summary", dir.display())))?;
    let rows: Vec<SummaryRow> = read_csv(&summary)?;
    let mut out = Vec::new();
    for row in &rows {
        let (model, spec) = load_checkpoint_as(&checkpoint_path(&dir, row.n, row.lambda), &cfg.training.shape)?;
        let fid_cfg = FidelityConfig {
            points: cfg.training.batch_size,
            resamples: cfg.output.resamples,
            seed: cfg.seed,
        };
        let (e_ref, reference, report) = if row.lambda == 0.0 && row.omega_sq > 0.0 {
            let exact = HarmonicState::new(row.n, row.omega_sq.sqrt());
            let f = fidelity(&exact, &model, spec.half_width, fid_cfg).map_err(|e| CliError::Numeric(e.to_string()))?;
            (exact.energy(), "analytic", f)
        } else {
            let sol = oracle_solution(&cfg, row.omega_sq, row.lambda, row.n + 1)?;
            let state = OracleState { solution: &sol, k: row.n };
            let f = fidelity(&state, &model as &dyn Wavefunction, spec.half_width, fid_cfg)
                .map_err(|e| CliError::Numeric(e.to_string()))?;
            (sol.energies[row.n], "oracle", f)
        };
        let err_e = energy_error(e_ref, row.energy).map_err(|e| CliError::Numeric(e.to_string()))?;
        let e_pert = (row.omega_sq == 1.0).then(|| perturbative_energy(row.n, row.lambda));
        out.push(CompareRow {
            n: row.n,
            lambda: row.lambda,
            omega_sq: row.omega_sq,
            e_pinn: row.energy,
            e_ref,
            reference: reference.into(),
            err_e,
            fidelity_mean: report.mean,
            fidelity_std: report.std,
            e_pert,
            err_pert: e_pert.map(|p| (p - row.energy) / p),
        });
    }
    write_csv(&dir.join("compare.csv"), &out)?;
    for r in &out {
        println!(
            "n={} λ={} E_pinn={} E_ref={} err_E={:.3e} fidelity={:.7}±{:.1e}",
            r.n, r.lambda, r.e_pinn, r.e_ref, r.err_e, r.fidelity_mean, r.fidelity_std
        );
    }
    Ok(())
}

/// One line of `fit_plot.csv`: a data point with both fitted lines.
#[derive(Debug, Clone, PartialEq, Serialize)]
struct PlotRow {
    n: usize,
    family: &'static str,
    log_lambda: f64,
    log_e: f64,
    fit_low: Option<f64>,
    fit_high: Option<f64>,
    fit_quartic: Option<f64>,
}

/// Oracle energies of states `0..=n_max` on the default λ grid, for the
/// anharmonic (ω² = 1) and pure quartic (ω² = 0) families.
pub fn oracle_energy_grid(n_max: usize, grid_points: usize) -> Result<Vec<EnergyRow>, OracleError> {
    let mut rows = Vec::new();
    for omega_sq in [1.0, 0.0] {
        for lambda in crate::analysis::default_lambda_grid() {
            let sol = solve_reference(omega_sq, lambda, n_max + 1, grid_points)?;
            rows.extend(sol.energies.iter().enumerate().map(|(n, &energy)| EnergyRow {
                n,
                lambda,
                energy,
                source: "oracle".into(),
                omega_sq,
            }));
        }
    }
    Ok(rows)
}

pub fn cmd_fit(a: &FitArgs) -> Result<(), CliError> {
    let dir = run_dir_for(a.run_dir.as_deref(), None, "fit");
    fs::create_dir_all(&dir).map_err(|source| IoError::Fs {
        path: dir.clone(),
        source,
    })?;
    let rows: Vec<EnergyRow> = match (&a.input, a.from_oracle) {
        (Some(path), _) => read_csv(path)?,
        (None, true) => {
            let rows = oracle_energy_grid(a.n_max, crate::oracle::DEFAULT_GRID_POINTS)?;
            write_csv(&dir.join("energies.csv"), &rows)?;
            rows
        }
        (None, false) => return Err(CliError::Usage("pass --input or --from-oracle".into())),
    };
    let samples: Vec<_> = rows.iter().map(EnergyRow::sample).collect();
    let analysis = analyze(&samples, Default::default()).map_err(|e| CliError::Usage(e.to_string()))?;
    write_csv(&dir.join("fits.csv"), &analysis.fits)?;
    write_csv(&dir.join("critical.csv"), &analysis.critical)?;

    let line = |n: usize, region: Region| -> Option<FitResult> {
        analysis.fits.iter().find(|f| f.n == n && f.region == region).copied()
    };
    let plot: Vec<PlotRow> = samples
        .iter()
        .filter(|s| s.lambda > 0.0 && s.energy > 0.0)
        .map(|s| {
            let x = s.lambda.ln();
            PlotRow {
                n: s.n,
                family: match s.family {
                    crate::analysis::Family::Anharmonic => "anharmonic",
                    crate::analysis::Family::Quartic => "quartic",
                },
                log_lambda: x,
                log_e: s.energy.ln(),
                fit_low: line(s.n, Region::LowLambda).map(|f| f.log_energy(x)),
                fit_high: line(s.n, Region::HighLambda).map(|f| f.log_energy(x)),
                fit_quartic: line(s.n, Region::Quartic).map(|f| f.log_energy(x)),
            }
        })
        .collect();
    write_csv(&dir.join("fit_plot.csv"), &plot)?;
    for f in &analysis.fits {
        println!("n={} {} a={:.4} b={:.4} residual={:.2e}", f.n, f.region, f.a, f.b, f.residual);
    }
    for c in &analysis.critical {
        println!("n={} lambda_c={:.4} E_c={:.4}", c.n, c.lambda_c, c.e_c);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_subcommand() {
        for args in [
            vec!["schrospec", "solve", "--preset", "harmonic", "--n-max", "5"],
            vec!["schrospec", "solve", "--preset", "double-well", "--force"],
            vec!["schrospec", "sweep", "--lambdas", "0.005,0.01", "--base-dir", "x"],
            vec!["schrospec", "oracle", "--preset", "quartic", "--states", "3"],
            vec!["schrospec", "compare", "--run-dir", "r"],
            vec!["schrospec", "fit", "--from-oracle"],
        ] {
            Cli::try_parse_from(&args).unwrap_or_else(|e| panic!("{args:?}: {e}"));
        }
        assert!(Cli::try_parse_from(["schrospec", "fit"]).is_err());
        assert!(Cli::try_parse_from(["schrospec", "sweep", "--resume", "--force"]).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["schrospec", "bogus"]), 2);
        assert_eq!(run(["schrospec", "solve", "--preset", "nope"]), 2);
        assert_eq!(CliError::NotConverged(String::new()).exit_code(), 3);
        assert_eq!(CliError::Numeric(String::new()).exit_code(), 4);
    }

    #[test]
    fn run_dir_precedence() {
        let cfg = RunConfig {
            output: crate::config::OutputConfig {
                run_dir: Some("from_config".into()),
                ..Default::default()
            },
            ..Default::default()
        };
        assert_eq!(run_dir_for(Some(Path::new("flag")), Some(&cfg), "h"), PathBuf::from("flag"));
        assert_eq!(run_dir_for(None, Some(&cfg), "h"), PathBuf::from("from_config"));
    }
}
