use serde::{Deserialize, Serialize};

use super::{classify_outcome, default_thresholds, Outcome, Thresholds, ToyLoss, ToyRun};
use crate::nn::{OptimizerKind, RecordSchedule, TrajectoryRecord};
use crate::error::{Error, Result};

/// Scalar deep linear model `f(w) = w^L` with centered, rescaled output
/// `(w^L - 1) / gamma`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneParamState {
    pub w: f64,
    pub depth: u32,
    pub gamma: f64,
    pub loss: ToyLoss,
}

impl OneParamState {
    pub fn new(depth: u32, gamma: f64, loss: ToyLoss) -> Result<Self> {
        if depth == 0 || !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Config(format!("need depth >= 1 and gamma > 0, got L={depth}, gamma={gamma}")));
        }
        Ok(Self { w: 1.0, depth, gamma, loss })
    }

    pub fn output(&self) -> f64 {
        (self.w.powi(self.depth as i32) - 1.0) / self.gamma
    }

    fn output_slope(&self) -> f64 {
        self.depth as f64 * self.w.powi(self.depth as i32 - 1) / self.gamma
    }
}

pub fn one_param_loss(state: &OneParamState) -> f64 {
    state.loss.value(state.output())
}

/// `dL/dw`.
pub fn one_param_grad(state: &OneParamState) -> f64 {
    state.loss.derivative(state.output()) * state.output_slope()
}

/// `d^2L/dw^2`.
pub fn one_param_hessian(state: &OneParamState) -> f64 {
    let l = state.depth as f64;
    let curvature = if state.depth >= 2 { l * (l - 1.0) * state.w.powi(state.depth as i32 - 2) / state.gamma } else { 0.0 };
    state.loss.second_derivative(state.output()) * state.output_slope().powi(2)
        + state.loss.derivative(state.output()) * curvature
}

/// `w* = (gamma + 1)^(1/L)`.
pub fn one_param_minimizer(depth: u32, gamma: f64) -> f64 {
    (gamma + 1.0).powf(1.0 / depth as f64)
}

/// Square-loss curvature at the minimizer: `(L^2 / gamma^2) w*^(2L - 2)`.
pub fn one_param_hessian_at_min(depth: u32, gamma: f64) -> f64 {
    let l = depth as f64;
    l * l / (gamma * gamma) * one_param_minimizer(depth, gamma).powf(2.0 * l - 2.0)
}

pub fn one_param_step(state: &mut OneParamState, eta: f64, optimizer: OptimizerKind) {
    let g = one_param_grad(state);
    state.w -= match optimizer {
        OptimizerKind::Sgd => eta * g,
        OptimizerKind::SignSgd => eta * crate::nn::sign(g),
    };
}

/// Runs `steps` updates from `state`.
pub fn simulate_one_param(state: OneParamState, eta: f64, steps: u64, optimizer: OptimizerKind) -> Result<ToyRun> {
    simulate_one_param_with(state, eta, steps, optimizer, &default_thresholds(optimizer))
}

pub fn simulate_one_param_with(
    mut state: OneParamState,
    eta: f64,
    steps: u64,
    optimizer: OptimizerKind,
    thresholds: &Thresholds,
) -> Result<ToyRun> {
    if !(eta >= 0.0 && eta.is_finite()) || steps == 0 {
        return Err(Error::Config(format!("need eta >= 0 and steps >= 1, got eta={eta}, T={steps}")));
    }
    let schedule = RecordSchedule::default();
    let mut trajectory = Vec::new();
    let mut losses = Vec::with_capacity(steps as usize + 1);
    for t in 0..=steps {
        let f = state.output();
        let raw = state.loss.value(f);
        let excess = if raw.is_finite() { state.loss.excess(f) } else { f64::NAN };
        losses.push(excess);
        if schedule.due(t) || t == steps {
            trajectory.push(TrajectoryRecord {
                step: t,
                tau: eta * t as f64 / state.gamma,
                train_loss: raw,
                test_loss: None,
                test_accuracy: None,
                lr: eta,
                kernel: None,
            });
        }
        if t == steps || thresholds.is_divergent(excess, losses[0]) {
            break;
        }
        one_param_step(&mut state, eta, optimizer);
    }
    let outcome: Outcome = classify_outcome(&losses, thresholds)?;
    Ok(ToyRun { trajectory, losses, outcome })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toy::OutcomeTag;

    #[test]
    fn minimizer_values() {
        assert_eq!(one_param_minimizer(1, 1.0), 2.0);
        assert!((one_param_minimizer(2, 3.0) - 2.0).abs() < 1e-15);
        assert!((one_param_minimizer(5, 1e5) / 10.0 - 1.0).abs() < 1e-4);
        for (l, g) in [(1, 0.3), (3, 7.0), (5, 1e-3)] {
            let s = OneParamState { w: one_param_minimizer(l, g), ..OneParamState::new(l, g, ToyLoss::Mse).unwrap() };
            assert!(one_param_loss(&s) < 1e-20);
        }
    }

    #[test]
    fn hessian_at_min_values() {
        for g in [1e-3, 0.5, 40.0] {
            assert!((one_param_hessian_at_min(1, g) * g * g - 1.0).abs() < 1e-12);
        }
        let h = one_param_hessian_at_min(2, 3.0);
        assert!((h - 16.0 / 9.0).abs() < 1e-12);
        let state = OneParamState { w: 2.0, ..OneParamState::new(2, 3.0, ToyLoss::Mse).unwrap() };
        let e = 1e-4;
        let at = |w| one_param_loss(&OneParamState { w, ..state });
        let fd = (at(2.0 + e) - 2.0 * at(2.0) + at(2.0 - e)) / (e * e);
        assert!((fd - h).abs() < 1e-6);
        assert!((one_param_hessian(&state) - h).abs() < 1e-12);
    }

    fn fitted_hessian_slope(lo: f64, hi: f64) -> f64 {
        let xs: Vec<f64> = (0..=40).map(|i| lo + (hi - lo) * i as f64 / 40.0).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| one_param_hessian_at_min(5, 10f64.powf(x)).log10()).collect();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>()
    }

    #[test]
    fn hessian_at_min_rich_slope() {
        // The (gamma + 1) in the minimizer bends the curve by ~1.6e-3 over [1e2, 1e5].
        let wide = fitted_hessian_slope(2.0, 5.0);
        assert!((wide + 0.4).abs() < 2e-3, "{wide}");
        let far = fitted_hessian_slope(3.0, 5.0);
        assert!((far + 0.4).abs() < 1e-3, "{far}");
    }

    #[test]
    fn gradient_matches_finite_difference() {
        for loss in [ToyLoss::Mse, ToyLoss::Xent] {
            for (l, g) in [(1, 1.0), (2, 0.1), (5, 3.0)] {
                for i in 0..=25 {
                    let w = 0.5 + 0.1 * i as f64;
                    let s = OneParamState { w, ..OneParamState::new(l, g, loss).unwrap() };
                    let h = 1e-6 * w;
                    let at = |w| one_param_loss(&OneParamState { w, ..s });
                    let fd = (at(w + h) - at(w - h)) / (2.0 * h);
                    let g = one_param_grad(&s);
                    assert!((fd - g).abs() <= 1e-8 * g.abs().max(1.0), "{loss:?} L={l} w={w}: {fd} vs {g}");
                }
            }
        }
    }

    #[test]
    fn centered_at_init() {
        let s = OneParamState::new(5, 1e-5, ToyLoss::Mse).unwrap();
        assert_eq!(s.output(), 0.0);
        assert_eq!(one_param_loss(&s), 0.5);
    }

    #[test]
    fn lazy_stable_rate_converges() {
        let g = 1e-3;
        let run = simulate_one_param(OneParamState::new(2, g, ToyLoss::Mse).unwrap(), 0.4 * g * g, 1000, OptimizerKind::Sgd).unwrap();
        assert_eq!(run.outcome.tag, OutcomeTag::Converged);
        assert!(run.outcome.final_loss < 1e-6);
    }

    #[test]
    fn lazy_large_rate_diverges() {
        let g = 1e-3;
        let run = simulate_one_param(OneParamState::new(2, g, ToyLoss::Mse).unwrap(), 10.0 * g * g, 1000, OptimizerKind::Sgd).unwrap();
        assert_eq!(run.outcome.tag, OutcomeTag::Diverged);
        assert!(run.losses.len() < 1001);
    }

    #[test]
    fn zero_rate_does_not_train() {
        for opt in [OptimizerKind::Sgd, OptimizerKind::SignSgd] {
            let run = simulate_one_param(OneParamState::new(3, 1.0, ToyLoss::Xent).unwrap(), 0.0, 50, opt).unwrap();
            assert_eq!(run.outcome.tag, OutcomeTag::NoTraining);
            assert_eq!(run.outcome.final_loss, run.outcome.initial_loss);
        }
    }

    #[test]
    fn sign_sgd_fixed_point_at_exact_minimum() {
        let mut s = OneParamState { w: 2.0, ..OneParamState::new(1, 1.0, ToyLoss::Mse).unwrap() };
        one_param_step(&mut s, 0.3, OptimizerKind::SignSgd);
        assert_eq!(s.w, 2.0);
    }

    #[test]
    fn sign_sgd_never_blows_up() {
        let run = simulate_one_param(OneParamState::new(5, 1e-2, ToyLoss::Mse).unwrap(), 1e6, 1000, OptimizerKind::SignSgd).unwrap();
        assert_eq!(run.outcome.tag, OutcomeTag::Oscillating);
        assert_eq!(run.losses.len(), 1001);
    }

    #[test]
    fn trajectory_is_log_spaced_with_tau() {
        let g = 10.0;
        let run = simulate_one_param(OneParamState::new(3, g, ToyLoss::Mse).unwrap(), 0.5, 10_000, OptimizerKind::Sgd).unwrap();
        assert_eq!(run.trajectory.len(), 100 + 40 + 1);
        let last = run.trajectory.last().unwrap();
        assert_eq!(last.step, 10_000);
        assert_eq!(last.tau, 0.5 * 10_000.0 / g);
    }
}
