//! Run configuration: presets, TOML files and their merge order.
//!
//! Values are resolved as preset, then the `scale` profile, then the file,
//! then command-line flags.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{default_lambda_grid, RegionCutoffs};
use crate::losses::default_e_init;
use crate::oracle::DEFAULT_GRID_POINTS;
use crate::trainer::{Family, TrainConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid value for `{field}`: {message}")]
    Field { field: String, message: String },
}

fn field_err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Harmonic,
    Anharmonic,
    DoubleWell,
    Quartic,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Harmonic, Preset::Anharmonic, Preset::DoubleWell, Preset::Quartic];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Harmonic => "harmonic",
            Preset::Anharmonic => "anharmonic",
            Preset::DoubleWell => "double-well",
            Preset::Quartic => "quartic",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| field_err("preset", format!("unknown preset `{s}`; expected harmonic, anharmonic, double-well or quartic")))
    }
}

/// Network size and threshold profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// 7×256 / 4×256 networks and the published thresholds.
    #[default]
    Paper,
    /// 4×64 networks with relaxed thresholds.
    Desk,
}

impl FromStr for Scale {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(Scale::Paper),
            "desk" => Ok(Scale::Desk),
            _ => Err(field_err("scale", format!("unknown scale `{s}`; expected paper or desk"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub omega_sq: f64,
    /// Coupling for `solve`.
    pub lambda: f64,
    /// Couplings for `sweep` and `oracle`.
    pub lambdas: Vec<f64>,
    pub n_max: usize,
    /// Overrides the computed training domain half-width.
    pub domain_override: Option<f64>,
    /// Ground-state E_init override; excited states use the previous energy.
    pub e_init: Option<f64>,
    pub a: f64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            omega_sq: 1.0,
            lambda: 0.0,
            lambdas: default_lambda_grid(),
            n_max: 5,
            domain_override: None,
            e_init: None,
            a: crate::losses::DEFAULT_STEEPNESS,
        }
    }
}

impl ProblemConfig {
    pub fn family(&self, lambda: f64) -> Family {
        Family {
            omega_sq: self.omega_sq,
            lambda,
            half_width: self.domain_override,
            e_init: self.e_init,
            a: Some(self.a),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub grid_points: usize,
    /// Overrides the automatic half-width of the reference grid.
    pub half_width: Option<f64>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            grid_points: DEFAULT_GRID_POINTS,
            half_width: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Directory holding the checkpoints that seed the first λ.
    pub base_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub run_dir: Option<PathBuf>,
    pub formats: Vec<Format>,
    /// Fidelity resamples used by `compare`.
    pub resamples: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            run_dir: None,
            formats: vec![Format::Csv, Format::Json],
            resamples: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub scale: Scale,
    pub seed: u64,
    /// Every reduction already runs in a fixed order; the flag is kept in
    /// the record of each run.
    pub deterministic: bool,
    pub problem: ProblemConfig,
    pub training: TrainConfig,
    pub oracle: OracleConfig,
    pub analysis: RegionCutoffs,
    pub sweep: SweepConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            scale: Scale::Paper,
            seed: 0,
            deterministic: true,
            problem: ProblemConfig::default(),
            training: TrainConfig::default(),
            oracle: OracleConfig::default(),
            analysis: RegionCutoffs::default(),
            sweep: SweepConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn preset(preset: Preset, scale: Scale) -> Self {
        let training = match scale {
            Scale::Paper => TrainConfig::default(),
            Scale::Desk => TrainConfig::desk(),
        };
        let mut cfg = Self {
            scale,
            training,
            ..Self::default()
        };
        let p = &mut cfg.problem;
        match preset {
            Preset::Harmonic => {
                p.omega_sq = 1.0;
                p.lambda = 0.0;
            }
            Preset::Anharmonic => {
                p.omega_sq = 1.0;
                p.lambda = 0.005;
            }
            Preset::DoubleWell => {
                p.omega_sq = -14.0;
                p.lambda = 1.0;
                p.lambdas = vec![1.0];
                p.n_max = 1;
                p.e_init = Some(default_e_init(-14.0));
                cfg.training.eq_loss_threshold = cfg.training.transfer_eq_loss_threshold;
            }
            Preset::Quartic => {
                p.omega_sq = 0.0;
                p.lambda = 1.28;
                p.lambdas = vec![1.28];
            }
        }
        cfg
    }

    /// Preset, then `scale`, then the TOML text, then validation.
    pub fn resolve(preset: Preset, scale: Option<Scale>, file: Option<&str>) -> Result<Self, ConfigError> {
        let overlay: Option<toml::Table> = file
            .map(|text| text.parse::<toml::Table>().map_err(|e| ConfigError::Parse(e.to_string())))
            .transpose()?;
        let file_scale = match overlay.as_ref().and_then(|t| t.get("scale")) {
            Some(v) => Some(
                v.as_str()
                    .ok_or_else(|| field_err("scale", "expected a string"))?
                    .parse::<Scale>()?,
            ),
            None => None,
        };
        let base = Self::preset(preset, scale.or(file_scale).unwrap_or_default());
        let cfg = match overlay {
            None => base,
            Some(overlay) => {
                let mut merged = toml::Table::try_from(&base).map_err(|e| ConfigError::Parse(e.to_string()))?;
                merge(&mut merged, overlay);
                toml::Value::Table(merged)
                    .try_into::<RunConfig>()
                    .map_err(|e| ConfigError::Parse(e.to_string()))?
            }
        };
        cfg.validate()?;
        Ok(cfg.synced())
    }

    /// Copies the run-level seed into the training block.
    pub fn synced(mut self) -> Self {
        self.training.seed = self.seed;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(field_err(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, found {}", self.schema_version),
            ));
        }
        let p = &self.problem;
        if !p.omega_sq.is_finite() {
            return Err(field_err("problem.omega_sq", "must be finite"));
        }
        if !(p.lambda >= 0.0 && p.lambda.is_finite()) {
            return Err(field_err("problem.lambda", format!("must be non-negative, got {}", p.lambda)));
        }
        if p.omega_sq == 0.0 && p.lambda == 0.0 {
            return Err(field_err("problem.lambda", "omega_sq and lambda cannot both be zero"));
        }
        if let Some(l) = p.lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(field_err("problem.lambdas", format!("values must be positive, got {l}")));
        }
        if let Some(h) = p.domain_override.filter(|h| !(*h > 0.0)) {
            return Err(field_err("problem.domain_override", format!("must be positive, got {h}")));
        }
        if !(p.a > 0.0) {
            return Err(field_err("problem.a", format!("must be positive, got {}", p.a)));
        }
        if self.oracle.grid_points < 201 {
            return Err(field_err("oracle.grid_points", format!("must be at least 201, got {}", self.oracle.grid_points)));
        }
        if let Some(h) = self.oracle.half_width.filter(|h| !(*h > 0.0)) {
            return Err(field_err("oracle.half_width", format!("must be positive, got {h}")));
        }
        if self.output.resamples == 0 {
            return Err(field_err("output.resamples", "must be at least 1"));
        }
        if !(self.analysis.low_max > 0.0 && self.analysis.high_min > 0.0) {
            return Err(field_err("analysis", "region cutoffs must be positive"));
        }
        self.training.validate().map_err(|e| {
            let msg = e.to_string();
            let field = msg
                .trim_start_matches("invalid training config: ")
                .split_whitespace()
                .next()
                .unwrap_or("training")
                .to_string();
            field_err(&format!("training.{field}"), msg)
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is always serializable")
    }
}

fn merge(base: &mut toml::Table, overlay: toml::Table) {
    for (key, value) in overlay {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let h = RunConfig::preset(Preset::Harmonic, Scale::Paper);
        assert_eq!((h.problem.omega_sq, h.problem.lambda, h.problem.n_max), (1.0, 0.0, 5));
        assert_eq!(h.training.batch_size, 512);
        assert_eq!(h.training.total_loss_threshold, 5e-2);
        assert_eq!(h.training.eq_loss_threshold, 4e-4);
        assert_eq!(h.training.transfer_eq_loss_threshold, 2e-5);
        assert_eq!(h.training.schedule.normalization, 500.0);
        assert_eq!(h.problem.a, 0.8);
        let dw = RunConfig::preset(Preset::DoubleWell, Scale::Paper);
        assert_eq!((dw.problem.omega_sq, dw.problem.lambda, dw.problem.n_max), (-14.0, 1.0, 1));
        assert!(dw.problem.e_init.unwrap() < 0.0);
        let q = RunConfig::preset(Preset::Quartic, Scale::Paper);
        assert_eq!((q.problem.omega_sq, q.problem.lambda), (0.0, 1.28));
        let a = RunConfig::preset(Preset::Anharmonic, Scale::Paper);
        assert_eq!(a.problem.lambdas.len(), 13);
        assert!((a.problem.lambdas[12] - 20.48).abs() < 1e-12);
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
            RunConfig::preset(p, Scale::Desk).validate().unwrap();
        }
    }

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig::preset(Preset::DoubleWell, Scale::Desk);
        let text = cfg.to_toml();
        let back = RunConfig::resolve(Preset::Harmonic, None, Some(&text)).unwrap();
        assert_eq!(back, cfg.synced());
    }

    #[test]
    fn file_overrides_preset_and_scale() {
        let text = "scale = \"desk\"\nseed = 7\n[problem]\nn_max = 1\n[training]\nmax_epochs = 10\n";
        let cfg = RunConfig::resolve(Preset::Harmonic, None, Some(text)).unwrap();
        assert_eq!(cfg.scale, Scale::Desk);
        assert_eq!(cfg.training.shape, crate::networks::ModelShape::desk());
        assert_eq!(cfg.training.max_epochs, 10);
        assert_eq!(cfg.training.seed, 7);
        assert_eq!(cfg.problem.n_max, 1);
        assert_eq!(cfg.problem.omega_sq, 1.0);
    }

    #[test]
    fn errors_name_the_field() {
        let unknown = RunConfig::resolve(Preset::Harmonic, None, Some("[training]\nlearnin_rate = 1.0\n")).unwrap_err();
        assert!(unknown.to_string().contains("learnin_rate"), "{unknown}");
        let bad = RunConfig::resolve(Preset::Harmonic, None, Some("[problem]\nlambda = -1.0\n")).unwrap_err();
        assert!(bad.to_string().contains("problem.lambda"), "{bad}");
        let thr = RunConfig::resolve(Preset::Harmonic, None, Some("[training]\neq_loss_threshold = 0.0\n")).unwrap_err();
        assert!(thr.to_string().contains("training.eq_loss_threshold"), "{thr}");
        let version = RunConfig::resolve(Preset::Harmonic, None, Some("schema_version = 9\n")).unwrap_err();
        assert!(version.to_string().contains("schema_version"), "{version}");
        assert!(matches!(
            RunConfig::resolve(Preset::Harmonic, None, Some("not toml [")),
            Err(ConfigError::Parse(_))
        ));
    }
}
