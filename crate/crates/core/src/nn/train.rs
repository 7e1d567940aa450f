use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{accuracy, step, CenteredNetwork, LossKind, MetricRecord, OptimizerConfig, RecordSchedule, TrajectoryRecord};
use crate::data::{Batch, Task};
use crate::error::{Error, Result};

/// Loss above this multiple of the initial loss counts as divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

/// A diagnostic evaluated on the network during training.
pub trait Probe: Send {
    fn name(&self) -> &str;
    fn due(&self, step: u64) -> bool;
    fn measure(&mut self, net: &CenteredNetwork, step: u64) -> Result<Vec<f64>>;
}

/// What gets recorded during a run, and when.
pub struct Recorder {
    pub schedule: RecordSchedule,
    /// Fixed held-out batch for test loss and accuracy.
    pub probe: Option<Batch>,
    /// Evaluate the probe batch at every recorded step (otherwise only at the ends).
    pub probe_at_records: bool,
    pub probes: Vec<Box<dyn Probe>>,
    pub deadline: Option<Instant>,
}

impl Default for Recorder {
    fn default() -> Self {
        Self {
            schedule: RecordSchedule::default(),
            probe: None,
            probe_at_records: true,
            probes: Vec::new(),
            deadline: None,
        }
    }
}

impl Recorder {
    pub fn with_probe(mut self, probe: Batch) -> Self {
        self.probe = Some(probe);
        self
    }

    pub fn with(mut self, probe: impl Probe + 'static) -> Self {
        self.probes.push(Box::new(probe));
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Diverged { step: u64 },
    /// Stopped at the wall-clock deadline.
    Truncated { step: u64 },
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub status: RunStatus,
    pub trajectory: Vec<TrajectoryRecord>,
    pub metrics: Vec<MetricRecord>,
    /// Batch loss at the weights before update `t`, for every step reached.
    pub losses: Vec<f64>,
    pub initial_probe_loss: Option<f64>,
    pub final_probe_loss: Option<f64>,
    pub final_probe_accuracy: Option<f64>,
    /// Number of optimizer updates applied.
    pub updates: u64,
}

impl TrainReport {
    /// Per-step losses with the endpoints replaced by held-out values when a
    /// probe set was available, so that outcome classification does not hinge
    /// on the noise of a single minibatch.
    pub fn outcome_series(&self) -> Vec<f64> {
        let mut series = self.losses.clone();
        if let (Some(first), Some(init)) = (series.first_mut(), self.initial_probe_loss) {
            *first = init;
        }
        if series.len() > 1 {
            if let (Some(last), Some(fin)) = (series.last_mut(), self.final_probe_loss) {
                *last = fin;
            }
        }
        series
    }

    pub fn diverged(&self) -> bool {
        matches!(self.status, RunStatus::Diverged { .. })
    }
}

fn probe_metrics(net: &CenteredNetwork, probe: &Batch, loss: LossKind, classification: bool) -> Option<(f64, Option<f64>)> {
    let out = net.centered_forward(&probe.inputs).ok()?;
    let value = loss.value(&out, &probe.targets);
    let acc = classification.then(|| accuracy(&out, &probe.targets));
    Some((value, acc))
}

/// Online training: a fresh batch from `task` at every step, `steps` updates in total.
///
/// Stops early, with a `Diverged` status rather than an error, when the batch
/// loss turns non-finite or exceeds [`DIVERGENCE_FACTOR`] times the initial loss.
#[allow(clippy::too_many_arguments)]
pub fn train(
    net: &mut CenteredNetwork,
    task: &dyn Task,
    loss: LossKind,
    opt: &OptimizerConfig,
    steps: u64,
    batch_size: usize,
    recorder: &mut Recorder,
) -> Result<TrainReport> {
    opt.validate()?;
    if steps == 0 || batch_size == 0 {
        return Err(Error::Config("training needs at least one step and one example per batch".into()));
    }
    let cfg = net.config();
    if task.input_dim() != cfg.input_dim || task.output_dim() != cfg.output_dim {
        return Err(Error::Config(format!(
            "task is {}->{} but the network is {}->{}",
            task.input_dim(),
            task.output_dim(),
            cfg.input_dim,
            cfg.output_dim
        )));
    }
    let classification = task.is_classification();
    let gamma = cfg.gamma;
    let tau_of = |t: u64| opt.rate * t as f64 / gamma;

    let initial_probe = recorder.probe.as_ref().and_then(|p| probe_metrics(net, p, loss, classification));
    let mut report = TrainReport {
        status: RunStatus::Completed,
        trajectory: Vec::new(),
        metrics: Vec::new(),
        losses: Vec::with_capacity(steps as usize + 1),
        initial_probe_loss: initial_probe.map(|p| p.0),
        final_probe_loss: None,
        final_probe_accuracy: None,
        updates: 0,
    };
    let mut last_probe: Option<(u64, (f64, Option<f64>))> = None;

    for t in 0..=steps {
        let batch = task.next_batch(batch_size, t);
        if classification && loss == LossKind::SoftmaxCrossEntropy && t == 0 {
            batch.check_one_hot()?;
        }
        let eval = match net.evaluate(&batch.inputs) {
            Ok(e) => e,
            Err(Error::NonFinite { .. }) => {
                report.status = RunStatus::Diverged { step: t };
                break;
            }
            Err(e) => return Err(e),
        };
        let value = loss.value(&eval.centered, &batch.targets);
        report.losses.push(value);
        let reference = report.initial_probe_loss.unwrap_or(report.losses[0]);

        if recorder.schedule.due(t) || t == steps {
            let test = if recorder.probe_at_records || t == steps {
                recorder.probe.as_ref().and_then(|p| probe_metrics(net, p, loss, classification))
            } else {
                None
            };
            if let Some(m) = test {
                last_probe = Some((t, m));
            }
            report.trajectory.push(TrajectoryRecord {
                step: t,
                tau: tau_of(t),
                train_loss: value,
                test_loss: test.map(|m| m.0),
                test_accuracy: test.and_then(|m| m.1),
                lr: opt.rate_at(t),
                kernel: None,
            });
        }
        for probe in recorder.probes.iter_mut() {
            if probe.due(t) || t == steps {
                match probe.measure(net, t) {
                    Ok(values) => report.metrics.push(MetricRecord {
                        step: t,
                        tau: tau_of(t),
                        metric_name: probe.name().to_string(),
                        values,
                    }),
                    Err(Error::NonFinite { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
        }

        if !value.is_finite() || value > DIVERGENCE_FACTOR * reference {
            report.status = RunStatus::Diverged { step: t };
            break;
        }
        if t == steps {
            break;
        }
        if recorder.deadline.is_some_and(|d| Instant::now() >= d) {
            report.status = RunStatus::Truncated { step: t };
            break;
        }
        let grad = match net.backward_from(&batch, loss, &eval) {
            Ok(g) => g,
            Err(Error::NonFinite { .. }) => {
                report.status = RunStatus::Diverged { step: t };
                break;
            }
            Err(e) => return Err(e),
        };
        step(net, &grad.params, opt, t)?;
        report.updates += 1;
    }

    if !report.diverged() {
        let fin = match last_probe {
            Some((t, m)) if t + 1 == report.losses.len() as u64 => Some(m),
            _ => recorder.probe.as_ref().and_then(|p| probe_metrics(net, p, loss, classification)),
        };
        report.final_probe_loss = fin.map(|m| m.0);
        report.final_probe_accuracy = fin.and_then(|m| m.1);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SingleIndexTask;
    use crate::nn::{init_network, Activation, NetworkConfig};

    fn linear_setup(seed: u64) -> (CenteredNetwork, SingleIndexTask) {
        let cfg = NetworkConfig::mup(2, 32, 8, 1, 1.0).with_activation(Activation::Identity).with_seed(seed);
        (init_network(cfg).unwrap(), SingleIndexTask::new(8, 1, 1.0, 3).unwrap())
    }

    #[test]
    fn linear_regression_limit_decreases_loss() {
        let (mut net, task) = linear_setup(1);
        let probe = task.probe(512);
        let mut rec = Recorder::default().with_probe(probe);
        let report = train(&mut net, &task, LossKind::Mse, &OptimizerConfig::sgd(0.05), 300, 64, &mut rec).unwrap();
        assert_eq!(report.status, RunStatus::Completed);
        let test: Vec<f64> = report.trajectory.iter().map(|r| r.test_loss.unwrap()).collect();
        assert!(test.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)), "not monotone: {test:?}");
        assert!(report.final_probe_loss.unwrap() < 0.05 * report.initial_probe_loss.unwrap());
    }

    #[test]
    fn huge_rate_is_reported_as_divergence() {
        let (mut net, task) = linear_setup(2);
        let mut rec = Recorder::default();
        let report = train(&mut net, &task, LossKind::Mse, &OptimizerConfig::sgd(1e10), 100, 16, &mut rec).unwrap();
        assert!(report.diverged());
        assert!(report.losses.len() < 10);
        assert_eq!(report.final_probe_loss, None);
    }

    #[test]
    fn identical_runs_give_identical_trajectories() {
        let run = || {
            let (mut net, task) = linear_setup(7);
            let mut rec = Recorder::default().with_probe(task.probe(64));
            let r = train(&mut net, &task, LossKind::Mse, &OptimizerConfig::sgd(0.02), 150, 8, &mut rec).unwrap();
            (r.trajectory, net)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn trajectory_tau_uses_base_rate_over_gamma() {
        let cfg = NetworkConfig::mup(2, 8, 4, 1, 4.0).with_seed(1);
        let mut net = init_network(cfg).unwrap();
        let task = SingleIndexTask::new(4, 1, 1.0, 1).unwrap();
        let mut rec = Recorder::default();
        let r = train(&mut net, &task, LossKind::Mse, &OptimizerConfig::sgd(2.0), 10, 4, &mut rec).unwrap();
        for rec in &r.trajectory {
            assert_eq!(rec.tau, 2.0 * rec.step as f64 / 4.0);
        }
        assert_eq!(r.trajectory.last().unwrap().step, 10);
    }

    #[test]
    fn rejects_mismatched_task() {
        let (mut net, _) = linear_setup(1);
        let task = SingleIndexTask::new(3, 1, 1.0, 0).unwrap();
        let err = train(&mut net, &task, LossKind::Mse, &OptimizerConfig::sgd(0.1), 1, 1, &mut Recorder::default());
        assert!(matches!(err, Err(Error::Config(_))));
    }
}
