use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{CellRun, CellRunner, SweepCell};
use crate::data::{Task, TaskSpec, DEFAULT_PROBE_SIZE};
use crate::error::Result;
use crate::metrics::{sharpness_probe, SpectrumOptions};
use crate::nn::{
    init_network, train, Activation, LossKind, NetworkConfig, OptimizerConfig, OptimizerKind, RecordSchedule, Recorder,
    RunStatus,
};
use crate::toy::{classify_outcome, Thresholds};

/// Network shape shared by every cell; `gamma` and the seed come from the cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpArch {
    pub depth: usize,
    pub width: usize,
    #[serde(default = "relu")]
    pub activation: Activation,
    #[serde(default)]
    pub residual: bool,
}

fn relu() -> Activation {
    Activation::Relu
}

fn default_probe_size() -> usize {
    DEFAULT_PROBE_SIZE
}

impl MlpArch {
    pub fn network(&self, task: &dyn Task, gamma: f64, seed: u64) -> NetworkConfig {
        let base = if self.residual { NetworkConfig::depth_mup } else { NetworkConfig::mup };
        base(self.depth, self.width, task.input_dim(), task.output_dim(), gamma)
            .with_activation(self.activation)
            .with_seed(seed)
    }
}

/// End-of-training sharpness, measured on a fixed probe batch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpnessSpec {
    #[serde(default = "default_sharpness_batch")]
    pub batch: usize,
    #[serde(default = "one")]
    pub k: usize,
}

fn default_sharpness_batch() -> usize {
    512
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub arch: MlpArch,
    pub task: TaskSpec,
    pub loss: LossKind,
    pub optimizer: OptimizerKind,
    #[serde(default = "default_probe_size")]
    pub probe_size: usize,
    #[serde(default)]
    pub record: RecordSchedule,
    #[serde(default)]
    pub sharpness: Option<SharpnessSpec>,
}

/// Trains one MLP per cell on an online task.
pub struct MlpRunner {
    spec: MlpSpec,
    task: Box<dyn Task>,
}

impl MlpRunner {
    pub fn new(spec: MlpSpec) -> Result<Self> {
        let task = spec.task.build()?;
        Ok(Self { spec, task })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn task(&self) -> &dyn Task {
        self.task.as_ref()
    }

    fn optimizer(&self, eta: f64) -> OptimizerConfig {
        match self.spec.optimizer {
            OptimizerKind::Sgd => OptimizerConfig::sgd(eta),
            OptimizerKind::SignSgd => OptimizerConfig::sign_sgd(eta),
        }
    }
}

impl CellRunner for MlpRunner {
    fn key(&self) -> serde_json::Value {
        serde_json::json!({ "runner": "mlp", "config": self.spec })
    }

    fn run(&self, cell: &SweepCell, deadline: Option<Instant>) -> Result<CellRun> {
        let task = self.task.as_ref();
        let mut net = init_network(self.spec.arch.network(task, cell.gamma, cell.seed))?;
        let opt = self.optimizer(cell.eta);
        let mut recorder = Recorder { schedule: self.spec.record.clone(), deadline, ..Default::default() }
            .with_probe(task.probe(self.spec.probe_size));
        let report = train(&mut net, task, self.spec.loss, &opt, cell.steps, cell.batch, &mut recorder)?;
        let outcome = classify_outcome(&report.outcome_series(), &Thresholds::default())?;
        let mut extras = std::collections::BTreeMap::new();
        if let Some(v) = report.final_probe_loss {
            extras.insert("final_test_loss".to_string(), v);
        }
        let truncated = matches!(report.status, RunStatus::Truncated { .. });
        if let (Some(s), true) = (&self.spec.sharpness, outcome.tag.is_convergent() && !truncated) {
            let batch = task.probe(s.batch);
            let opts = SpectrumOptions { k: s.k, seed: cell.seed, ..Default::default() };
            if let Ok(r) = sharpness_probe(&net, &batch, self.spec.loss, &opt, cell.steps, &opts) {
                extras.insert("sharpness".to_string(), r.sharpness);
                extras.insert("sharpness_ratio".to_string(), r.ratio);
            }
        }
        Ok(CellRun {
            outcome: Some(outcome),
            accuracy: report.final_probe_accuracy,
            steps: report.updates,
            truncated,
            trajectory: report.trajectory,
            extras,
        })
    }
}
