use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::nn::TrajectoryRecord;
use crate::toy::Outcome;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub gamma_index: usize,
    pub eta_index: usize,
    pub gamma: f64,
    pub eta: f64,
    pub seed: u64,
    pub steps: u64,
    pub batch: usize,
}

impl SweepCell {
    pub fn id(&self) -> String {
        format!("g{:03}-e{:03}", self.gamma_index, self.eta_index)
    }
}

/// What a runner reports for one cell.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct CellRun {
    pub outcome: Option<Outcome>,
    pub accuracy: Option<f64>,
    pub steps: u64,
    pub truncated: bool,
    pub trajectory: Vec<TrajectoryRecord>,
    pub extras: BTreeMap<String, f64>,
}

/// Executes one cell. Implementations must be deterministic in the cell.
pub trait CellRunner: Sync {
    /// Identifies the runner configuration; a resumed sweep must present the same key.
    fn key(&self) -> serde_json::Value;

    fn run(&self, cell: &SweepCell, deadline: Option<Instant>) -> Result<CellRun>;
}

/// Persisted result of one attempted cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: SweepCell,
    /// Missing when the runner failed.
    pub outcome: Option<Outcome>,
    pub accuracy: Option<f64>,
    pub steps: u64,
    pub truncated: bool,
    pub trajectory_path: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    #[serde(skip)]
    pub trajectory: Vec<TrajectoryRecord>,
}

impl CellResult {
    pub fn from_run(cell: SweepCell, run: CellRun) -> Self {
        Self {
            cell,
            outcome: run.outcome,
            accuracy: run.accuracy,
            steps: run.steps,
            truncated: run.truncated,
            trajectory_path: None,
            extras: run.extras,
            failure: None,
            trajectory: run.trajectory,
        }
    }

    pub fn failed(cell: SweepCell, message: String) -> Self {
        Self {
            cell,
            outcome: None,
            accuracy: None,
            steps: 0,
            truncated: false,
            trajectory_path: None,
            extras: BTreeMap::new(),
            failure: Some(message),
            trajectory: Vec::new(),
        }
    }

    pub fn is_convergent(&self) -> bool {
        self.outcome.is_some_and(|o| o.tag.is_convergent())
    }

    /// The result without its storage location or in-memory trajectory, for comparisons.
    pub fn summary(&self) -> CellResult {
        CellResult { trajectory_path: None, trajectory: Vec::new(), ..self.clone() }
    }
}
