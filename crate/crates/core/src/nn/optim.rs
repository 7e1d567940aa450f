use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{CenteredNetwork, ParamSet};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    #[serde(rename = "signsgd")]
    SignSgd,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    #[default]
    Constant,
    /// Linear warmup over `warmup_fraction * total_steps`, then cosine decay to zero.
    WarmupCosine { warmup_fraction: f64, total_steps: u64 },
}

impl Schedule {
    pub fn factor(&self, step: u64) -> f64 {
        match *self {
            Schedule::Constant => 1.0,
            Schedule::WarmupCosine { warmup_fraction, total_steps } => {
                let total = total_steps as f64;
                let warmup = warmup_fraction * total;
                let t = step as f64;
                if t < warmup {
                    t / warmup
                } else if t >= total {
                    0.0
                } else {
                    0.5 * (1.0 + (PI * (t - warmup) / (total - warmup)).cos())
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub rate: f64,
    #[serde(default)]
    pub schedule: Schedule,
}

impl OptimizerConfig {
    pub fn sgd(rate: f64) -> Self {
        Self { kind: OptimizerKind::Sgd, rate, schedule: Schedule::Constant }
    }

    pub fn sign_sgd(rate: f64) -> Self {
        Self { kind: OptimizerKind::SignSgd, rate, schedule: Schedule::Constant }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(Error::Config(format!("learning rate must be finite and >= 0, got {}", self.rate)));
        }
        if let Schedule::WarmupCosine { warmup_fraction, total_steps } = self.schedule {
            if !(0.0..1.0).contains(&warmup_fraction) || total_steps == 0 {
                return Err(Error::Config("warmup_fraction must lie in [0, 1) with total_steps >= 1".into()));
            }
        }
        Ok(())
    }

    /// Scheduled base rate at `step`.
    pub fn rate_at(&self, step: u64) -> f64 {
        self.rate * self.schedule.factor(step)
    }

    /// Factor between the base rate and the per-weight SGD step: `N` for SGD
    /// (muP global rate `eta * N`), 1 for SignSGD.
    pub fn rate_scale(&self, width: usize) -> f64 {
        match self.kind {
            OptimizerKind::Sgd => width as f64,
            OptimizerKind::SignSgd => 1.0,
        }
    }
}

#[inline]
pub(crate) fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// One optimizer update of the live weights with gradient `grad` at `step`.
///
/// SGD: `W -= N * eta(t) * grad`. SignSGD: `W -= eta(t) * sign(grad)` with `sign(0) = 0`.
pub fn step(net: &mut CenteredNetwork, grad: &ParamSet, opt: &OptimizerConfig, t: u64) -> Result<()> {
    if grad.shapes() != net.live().shapes() {
        return Err(Error::Argument("gradient shapes do not match the network".into()));
    }
    if !grad.is_finite() {
        return Err(Error::NonFinite { stage: "gradient", step: Some(t) });
    }
    let eta = opt.rate_at(t);
    if eta == 0.0 {
        return Ok(());
    }
    match opt.kind {
        OptimizerKind::Sgd => {
            let scale = opt.rate_scale(net.config().width);
            net.live_mut().axpy(-scale * eta, grad);
        }
        OptimizerKind::SignSgd => {
            for (w, g) in net.live_mut().layers_mut().iter_mut().zip(grad.layers()) {
                w.zip_apply(g, |w, g| *w -= eta * sign(g));
            }
        }
    }
    Ok(())
}
