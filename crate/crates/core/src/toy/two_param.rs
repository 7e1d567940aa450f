use serde::{Deserialize, Serialize};

use super::{classify_outcome, default_thresholds, Thresholds, ToyLoss, ToyRun};
use crate::error::{Error, Result};
use crate::nn::{sign, OptimizerKind, RecordSchedule, TrajectoryRecord};

/// Two-parameter model `f = u . v` with `v = swap(u)` held throughout,
/// starting from `u = (1, 0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoParamState {
    pub u1: f64,
    pub u2: f64,
    pub gamma: f64,
    pub loss: ToyLoss,
}

impl TwoParamState {
    pub fn new(gamma: f64, loss: ToyLoss) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be positive, got {gamma}")));
        }
        Ok(Self { u1: 1.0, u2: 0.0, gamma, loss })
    }

    pub fn v(&self) -> (f64, f64) {
        (self.u2, self.u1)
    }

    /// Uncentered output `u . v`.
    pub fn raw_output(&self) -> f64 {
        let (v1, v2) = self.v();
        self.u1 * v1 + self.u2 * v2
    }

    pub fn output(&self) -> f64 {
        2.0 * self.u1 * self.u2 / self.gamma
    }

    /// Tangent kernel `(|u|^2 + |v|^2) / gamma^2`.
    pub fn kernel(&self) -> f64 {
        2.0 * (self.u1 * self.u1 + self.u2 * self.u2) / (self.gamma * self.gamma)
    }

    /// Residual `1 - f`.
    pub fn residual(&self) -> f64 {
        1.0 - self.output()
    }

    pub fn loss_value(&self) -> f64 {
        self.loss.value(self.output())
    }
}

/// One simultaneous update of both coordinates.
pub fn two_param_step(state: &TwoParamState, eta: f64, optimizer: OptimizerKind) -> TwoParamState {
    let d = state.loss.derivative(state.output()) / state.gamma;
    let (v1, v2) = state.v();
    let (g1, g2) = (d * v1, d * v2);
    let (s1, s2) = match optimizer {
        OptimizerKind::Sgd => (eta * g1, eta * g2),
        OptimizerKind::SignSgd => (eta * sign(g1), eta * sign(g2)),
    };
    TwoParamState { u1: state.u1 - s1, u2: state.u2 - s2, ..*state }
}

pub fn simulate_two_param(gamma: f64, eta: f64, steps: u64, loss: ToyLoss, optimizer: OptimizerKind) -> Result<ToyRun> {
    simulate_two_param_with(gamma, eta, steps, loss, optimizer, &default_thresholds(optimizer))
}

pub fn simulate_two_param_with(
    gamma: f64,
    eta: f64,
    steps: u64,
    loss: ToyLoss,
    optimizer: OptimizerKind,
    thresholds: &Thresholds,
) -> Result<ToyRun> {
    if !(eta >= 0.0 && eta.is_finite()) || steps == 0 {
        return Err(Error::Config(format!("need eta >= 0 and steps >= 1, got eta={eta}, T={steps}")));
    }
    let mut state = TwoParamState::new(gamma, loss)?;
    let schedule = RecordSchedule::default();
    let mut trajectory = Vec::new();
    let mut losses = Vec::with_capacity(steps as usize + 1);
    for t in 0..=steps {
        let f = state.output();
        let raw = loss.value(f);
        let excess = if raw.is_finite() { loss.excess(f) } else { f64::NAN };
        losses.push(excess);
        if schedule.due(t) || t == steps {
            trajectory.push(TrajectoryRecord {
                step: t,
                tau: eta * t as f64 / gamma,
                train_loss: raw,
                test_loss: None,
                test_accuracy: None,
                lr: eta,
                kernel: Some(state.kernel()),
            });
        }
        if t == steps || thresholds.is_divergent(excess, losses[0]) {
            break;
        }
        state = two_param_step(&state, eta, optimizer);
    }
    let outcome = classify_outcome(&losses, thresholds)?;
    Ok(ToyRun { trajectory, losses, outcome })
}
