use serde::{Deserialize, Serialize};

use super::ToyLoss;
use crate::nn::OptimizerKind;

/// Richness regimes with power-law learning-rate scalings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Lazy,
    UltraRich,
}

impl Regime {
    /// Regimes whose predictions apply at `gamma`. Both apply in the crossover band `[0.1, 10]`.
    pub fn at(gamma: f64) -> Vec<Regime> {
        let mut out = Vec::new();
        if gamma <= 10.0 {
            out.push(Regime::Lazy);
        }
        if gamma >= 0.1 {
            out.push(Regime::UltraRich);
        }
        out
    }
}

/// `gamma^gamma_exp * T^t_exp`, coefficient 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub gamma_exp: f64,
    pub t_exp: f64,
}

impl PowerLaw {
    pub const fn new(gamma_exp: f64, t_exp: f64) -> Self {
        Self { gamma_exp, t_exp }
    }

    pub fn eval(&self, gamma: f64, steps: f64) -> f64 {
        gamma.powf(self.gamma_exp) * steps.powf(self.t_exp)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeBounds {
    pub regime: Regime,
    pub eta_min: PowerLaw,
    pub eta_crit: Option<PowerLaw>,
    pub eta_max: PowerLaw,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeValues {
    pub regime: Regime,
    pub eta_min: f64,
    pub eta_crit: Option<f64>,
    pub eta_max: f64,
}

impl RegimeBounds {
    pub fn for_regime(loss: ToyLoss, optimizer: OptimizerKind, depth: u32, regime: Regime) -> Self {
        let l = depth as f64;
        let p = PowerLaw::new;
        match (optimizer, regime) {
            (OptimizerKind::Sgd, Regime::Lazy) => RegimeBounds {
                regime,
                eta_min: p(2.0, -1.0),
                eta_crit: Some(p(2.0, 0.0)),
                eta_max: match loss {
                    ToyLoss::Mse => p(2.0, 0.0),
                    ToyLoss::Xent => p(1.0, 0.0),
                },
            },
            (OptimizerKind::Sgd, Regime::UltraRich) => {
                RegimeBounds { regime, eta_min: p(1.0, -1.0), eta_crit: None, eta_max: p(2.0 / l, 0.0) }
            }
            (OptimizerKind::SignSgd, Regime::Lazy) => {
                RegimeBounds { regime, eta_min: p(1.0, 0.0), eta_crit: None, eta_max: p(1.0, 0.0) }
            }
            (OptimizerKind::SignSgd, Regime::UltraRich) => {
                RegimeBounds { regime, eta_min: p(1.0 / l, 0.0), eta_crit: None, eta_max: p(1.0 / l, 0.0) }
            }
        }
    }

    pub fn eval(&self, gamma: f64, steps: f64) -> RegimeValues {
        RegimeValues {
            regime: self.regime,
            eta_min: self.eta_min.eval(gamma, steps),
            eta_crit: self.eta_crit.map(|c| c.eval(gamma, steps)),
            eta_max: self.eta_max.eval(gamma, steps),
        }
    }
}

/// Order-of-magnitude learning-rate anchors at one `gamma`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimePrediction {
    pub gamma: f64,
    pub steps: u64,
    pub branches: Vec<RegimeValues>,
}

impl RegimePrediction {
    pub fn branch(&self, regime: Regime) -> Option<&RegimeValues> {
        self.branches.iter().find(|b| b.regime == regime)
    }
}

pub fn predict_regime(loss: ToyLoss, optimizer: OptimizerKind, depth: u32, gamma: f64, steps: u64) -> RegimePrediction {
    let branches = Regime::at(gamma)
        .into_iter()
        .map(|r| RegimeBounds::for_regime(loss, optimizer, depth, r).eval(gamma, steps as f64))
        .collect();
    RegimePrediction { gamma, steps, branches }
}
