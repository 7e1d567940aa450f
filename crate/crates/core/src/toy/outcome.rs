use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeTag {
    Diverged,
    NoTraining,
    Converged,
    Catapult,
    Oscillating,
}

impl OutcomeTag {
    /// Converged or catapulted: the run ended trained.
    pub fn is_convergent(self) -> bool {
        matches!(self, OutcomeTag::Converged | OutcomeTag::Catapult)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeTag::Diverged => "diverged",
            OutcomeTag::NoTraining => "no_training",
            OutcomeTag::Converged => "converged",
            OutcomeTag::Catapult => "catapult",
            OutcomeTag::Oscillating => "oscillating",
        }
    }
}

impl std::fmt::Display for OutcomeTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Final loss must fall to this fraction of the initial loss.
    pub converge: f64,
    /// Peak loss at this multiple of the initial loss marks a catapult.
    pub catapult: f64,
    /// Loss above this multiple of the initial loss is divergence. `None`
    /// treats only non-finite losses as divergent.
    pub diverge: Option<f64>,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { converge: 0.5, catapult: 10.0, diverge: Some(1e6) }
    }
}

impl Thresholds {
    pub fn bounded_only() -> Self {
        Self { diverge: None, ..Self::default() }
    }

    pub fn is_divergent(&self, loss: f64, initial: f64) -> bool {
        !loss.is_finite() || self.diverge.is_some_and(|k| loss > k * initial)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub tag: OutcomeTag,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub max_loss: f64,
    /// First step whose loss is below 0.9 of the initial loss.
    pub steps_to_first_drop: Option<u64>,
}

/// First index with `loss < 0.9 * losses[0]`.
pub fn first_drop(losses: &[f64]) -> Option<u64> {
    let initial = *losses.first()?;
    losses.iter().position(|&l| l < 0.9 * initial).map(|i| i as u64)
}

/// Classifies a per-step loss series (index 0 is the initial loss).
pub fn classify_outcome(losses: &[f64], thresholds: &Thresholds) -> Result<Outcome> {
    let (&initial, &last) = match (losses.first(), losses.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Argument("cannot classify an empty trajectory".into())),
    };
    let max_loss = losses.iter().copied().fold(f64::NEG_INFINITY, |a, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) });
    let outcome = |tag| Outcome {
        tag,
        initial_loss: initial,
        final_loss: last,
        max_loss,
        steps_to_first_drop: first_drop(losses),
    };

    if losses.iter().any(|&l| thresholds.is_divergent(l, initial)) {
        return Ok(outcome(OutcomeTag::Diverged));
    }
    let converged = last <= thresholds.converge * initial;
    if converged && max_loss >= thresholds.catapult * initial {
        return Ok(outcome(OutcomeTag::Catapult));
    }
    if converged {
        return Ok(outcome(OutcomeTag::Converged));
    }
    let tail_len = losses.len().div_ceil(10).max(2).min(losses.len());
    let tail = &losses[losses.len() - tail_len..];
    let (lo, hi) = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &l| (lo.min(l), hi.max(l)));
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    if hi - lo > 0.1 * mean.abs() {
        return Ok(outcome(OutcomeTag::Oscillating));
    }
    Ok(outcome(OutcomeTag::NoTraining))
}
