//! Exactly solvable toy models of feature-learning strength.
//!
//! A scalar deep linear model `w^L` and a two-parameter catapult model, both
//! centered and rescaled by the richness `gamma`, trained by SGD or SignSGD.

mod loss;
mod one_param;
mod outcome;
mod regime;
mod two_param;

pub use loss::{sigmoid, softplus, ToyLoss, XENT_P0, XENT_P1};
pub use one_param::{
    one_param_grad, one_param_hessian, one_param_hessian_at_min, one_param_loss, one_param_minimizer, one_param_step,
    simulate_one_param, simulate_one_param_with, OneParamState,
};
pub use outcome::{classify_outcome, first_drop, Outcome, OutcomeTag, Thresholds};
pub use regime::{predict_regime, PowerLaw, Regime, RegimeBounds, RegimePrediction, RegimeValues};
pub use two_param::{simulate_two_param, simulate_two_param_with, two_param_step, TwoParamState};

use serde::{Deserialize, Serialize};

use crate::nn::{OptimizerKind, TrajectoryRecord};

/// Result of one toy simulation. `losses` holds the loss above its floor at
/// every step reached; outcome classification runs on that series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyRun {
    pub trajectory: Vec<TrajectoryRecord>,
    pub losses: Vec<f64>,
    pub outcome: Outcome,
}

/// SignSGD iterates stay bounded, so only non-finite losses count as divergence.
pub fn default_thresholds(optimizer: OptimizerKind) -> Thresholds {
    match optimizer {
        OptimizerKind::Sgd => Thresholds::default(),
        OptimizerKind::SignSgd => Thresholds::bounded_only(),
    }
}

/// Which toy model a sweep cell simulates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ToyModel {
    OneParam { depth: u32 },
    TwoParam,
}

impl ToyModel {
    pub fn simulate(self, gamma: f64, eta: f64, steps: u64, loss: ToyLoss, optimizer: OptimizerKind) -> crate::Result<ToyRun> {
        match self {
            ToyModel::OneParam { depth } => simulate_one_param(OneParamState::new(depth, gamma, loss)?, eta, steps, optimizer),
            ToyModel::TwoParam => simulate_two_param(gamma, eta, steps, loss, optimizer),
        }
    }
}
