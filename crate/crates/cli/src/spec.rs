//! Versioned JSON specs for every command.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use richsweep::data::{TaskSpec, DEFAULT_PROBE_SIZE};
use richsweep::metrics::MatrixNorm;
use richsweep::nn::{LossKind, OptimizerKind, RecordSchedule};
use richsweep::report::HeatValue;
use richsweep::sweep::{GridSpec, MlpArch, MlpSpec, SharpnessSpec};
use richsweep::toy::{ToyLoss, ToyModel};

use crate::Failure;

pub const SCHEMA_VERSION: u32 = 1;

/// Reads a spec, reporting the JSON path of the first malformed field.
pub fn load<T: DeserializeOwned + Validate>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    match value.get("schema_version") {
        Some(v) if v.as_u64() == Some(SCHEMA_VERSION as u64) => {}
        Some(v) => return Err(invalid("schema_version", format!("unsupported version {v}, expected {SCHEMA_VERSION}"))),
        None => return Err(invalid("schema_version", "missing")),
    }
    let spec: T = serde_path_to_error::deserialize(value).map_err(|e| {
        let at = e.path().to_string();
        invalid(if at == "." { "<root>" } else { &at }, e.into_inner())
    })?;
    spec.validate()?;
    Ok(spec)
}

pub fn invalid(path: &str, message: impl std::fmt::Display) -> Failure {
    Failure::Invalid(format!("{path}: {message}"))
}

pub trait Validate {
    fn validate(&self) -> Result<(), Failure>;
}

fn positive(path: &str, v: f64) -> Result<(), Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(path, format!("must be positive and finite, got {v}")))
    }
}

fn at_least_one(path: &str, v: u64) -> Result<(), Failure> {
    if v >= 1 {
        Ok(())
    } else {
        Err(invalid(path, "must be at least 1"))
    }
}

fn check_grid(path: &str, grid: &GridSpec) -> Result<(), Failure> {
    grid.validate().map_err(|e| invalid(path, e))
}

fn check_arch(path: &str, arch: &MlpArch, task: &TaskSpec) -> Result<(), Failure> {
    let task = task.build().map_err(|e| invalid(&format!("{path}.task"), e))?;
    arch.network(task.as_ref(), 1.0, 0).validate().map_err(|e| invalid(&format!("{path}.arch"), e))
}

fn sgd() -> OptimizerKind {
    OptimizerKind::Sgd
}

fn default_probe_size() -> usize {
    DEFAULT_PROBE_SIZE
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyPhaseSpec {
    pub schema_version: u32,
    pub model: ToyModel,
    pub loss: ToyLoss,
    #[serde(default = "sgd")]
    pub optimizer: OptimizerKind,
    pub grid: GridSpec,
}

impl Validate for ToyPhaseSpec {
    fn validate(&self) -> Result<(), Failure> {
        if let ToyModel::OneParam { depth } = self.model {
            at_least_one("model.depth", depth as u64)?;
        }
        check_grid("grid", &self.grid)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetPhaseSpec {
    pub schema_version: u32,
    pub mlp: MlpSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub value: Option<HeatValue>,
}

impl Validate for NetPhaseSpec {
    fn validate(&self) -> Result<(), Failure> {
        check_arch("mlp", &self.mlp.arch, &self.mlp.task)?;
        at_least_one("mlp.probe_size", self.mlp.probe_size as u64)?;
        if let Some(s) = &self.mlp.sharpness {
            at_least_one("mlp.sharpness.batch", s.batch as u64)?;
            at_least_one("mlp.sharpness.k", s.k as u64)?;
        }
        check_grid("grid", &self.grid)
    }
}

/// Diagnostics tracked during a single run, on the record schedule.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSpec {
    #[serde(default)]
    pub sharpness: Option<SharpnessSpec>,
    #[serde(default)]
    pub kta: Option<KtaSpec>,
    #[serde(default)]
    pub movement: Option<MatrixNorm>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KtaSpec {
    #[serde(default = "kta_batch")]
    pub batch: usize,
    /// Hidden layer whose kernel is aligned; defaults to the last one.
    #[serde(default)]
    pub layer: Option<usize>,
    #[serde(default = "all_norms")]
    pub norms: Vec<MatrixNorm>,
}

fn kta_batch() -> usize {
    512
}

fn all_norms() -> Vec<MatrixNorm> {
    MatrixNorm::ALL.to_vec()
}

/// One training run. `gamma` and `eta` may be left out when a command supplies them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub arch: MlpArch,
    pub task: TaskSpec,
    pub loss: LossKind,
    #[serde(default = "sgd")]
    pub optimizer: OptimizerKind,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub eta: Option<f64>,
    pub steps: u64,
    pub batch: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_probe_size")]
    pub probe_size: usize,
    #[serde(default)]
    pub record: RecordSchedule,
    #[serde(default)]
    pub metrics: MetricsSpec,
}

impl RunConfig {
    fn check(&self, path: &str, needs_rates: bool) -> Result<(), Failure> {
        check_arch(path, &self.arch, &self.task)?;
        at_least_one(&format!("{path}.steps"), self.steps)?;
        at_least_one(&format!("{path}.batch"), self.batch as u64)?;
        at_least_one(&format!("{path}.probe_size"), self.probe_size as u64)?;
        for (name, v) in [("gamma", self.gamma), ("eta", self.eta)] {
            match v {
                Some(v) => positive(&format!("{path}.{name}"), v)?,
                None if needs_rates => return Err(invalid(&format!("{path}.{name}"), "missing")),
                None => {}
            }
        }
        if let Some(k) = &self.metrics.kta {
            at_least_one(&format!("{path}.metrics.kta.batch"), k.batch as u64)?;
            let depth = self.arch.depth;
            if let Some(layer) = k.layer {
                if layer == 0 || layer >= depth {
                    return Err(invalid(&format!("{path}.metrics.kta.layer"), format!("must lie in 1..{depth}")));
                }
            } else if depth < 2 {
                return Err(invalid(&format!("{path}.metrics.kta"), "needs a hidden layer (depth >= 2)"));
            }
            if k.norms.is_empty() {
                return Err(invalid(&format!("{path}.metrics.kta.norms"), "must name at least one norm"));
            }
        }
        if let Some(s) = &self.metrics.sharpness {
            at_least_one(&format!("{path}.metrics.sharpness.batch"), s.batch as u64)?;
            at_least_one(&format!("{path}.metrics.sharpness.k"), s.k as u64)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOneSpec {
    pub schema_version: u32,
    pub run: RunConfig,
}

impl Validate for TrainOneSpec {
    fn validate(&self) -> Result<(), Failure> {
        self.run.check("run", true)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatePoint {
    pub gamma: f64,
    pub eta: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectraSpec {
    pub schema_version: u32,
    pub run: RunConfig,
    pub points: Vec<RatePoint>,
}

impl Validate for SpectraSpec {
    fn validate(&self) -> Result<(), Failure> {
        self.run.check("run", false)?;
        if self.run.gamma.is_some() || self.run.eta.is_some() {
            return Err(invalid("run.gamma", "set rates per entry of `points` instead"));
        }
        if self.run.metrics.sharpness.is_none() {
            return Err(invalid("run.metrics.sharpness", "required for spectra"));
        }
        if self.points.is_empty() {
            return Err(invalid("points", "must hold at least one (gamma, eta) pair"));
        }
        for (i, p) in self.points.iter().enumerate() {
            positive(&format!("points[{i}].gamma"), p.gamma)?;
            positive(&format!("points[{i}].eta"), p.eta)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSpec {
    pub schema_version: u32,
    /// Directories written by `train-one`.
    pub runs: Vec<String>,
    /// Hidden layer for kernel comparisons; defaults to the last one.
    #[serde(default)]
    pub layer: Option<usize>,
}

impl Validate for CompareSpec {
    fn validate(&self) -> Result<(), Failure> {
        if self.runs.len() < 2 {
            return Err(invalid("runs", "compare needs at least two runs"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSpec {
    pub schema_version: u32,
    /// Directories written by `train-one` or `spectra`.
    #[serde(default)]
    pub runs: Vec<String>,
    /// Directories written by `toy-phase` or `net-phase`.
    #[serde(default)]
    pub portraits: Vec<String>,
}

impl Validate for ReportSpec {
    fn validate(&self) -> Result<(), Failure> {
        if self.runs.is_empty() && self.portraits.is_empty() {
            return Err(invalid("runs", "nothing to report: give runs or portraits"));
        }
        Ok(())
    }
}
