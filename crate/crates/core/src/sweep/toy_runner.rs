use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{CellRun, CellRunner, SweepCell};
use crate::error::Result;
use crate::nn::OptimizerKind;
use crate::toy::{ToyLoss, ToyModel};

/// Runs toy-model cells. Batch size and seed are ignored; the models are deterministic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyRunner {
    pub model: ToyModel,
    pub loss: ToyLoss,
    pub optimizer: OptimizerKind,
}

impl CellRunner for ToyRunner {
    fn key(&self) -> serde_json::Value {
        serde_json::json!({ "runner": "toy", "config": self })
    }

    fn run(&self, cell: &SweepCell, _deadline: Option<Instant>) -> Result<CellRun> {
        let run = self.model.simulate(cell.gamma, cell.eta, cell.steps, self.loss, self.optimizer)?;
        Ok(CellRun {
            outcome: Some(run.outcome),
            accuracy: None,
            steps: run.losses.len() as u64 - 1,
            truncated: false,
            trajectory: run.trajectory,
            extras: Default::default(),
        })
    }
}
