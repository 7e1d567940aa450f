//! Training-time probes that stream metric records alongside the trajectory.

use super::alignment::{activation_kernel, kta, MatrixNorm};
use super::movement::weight_movement;
use super::spectrum::{sharpness_probe, SpectrumOptions};
use crate::data::Batch;
use crate::error::Result;
use crate::nn::{CenteredNetwork, LossKind, OptimizerConfig, Probe, RecordSchedule};

/// Top-k curvature eigenvalues on a fixed batch, in optimizer units.
/// Values: the eigenvalues, descending.
pub struct SharpnessProbe {
    pub batch: Batch,
    pub loss: LossKind,
    pub optimizer: OptimizerConfig,
    pub schedule: RecordSchedule,
    pub options: SpectrumOptions,
}

impl Probe for SharpnessProbe {
    fn name(&self) -> &str {
        "sharpness"
    }

    fn due(&self, step: u64) -> bool {
        self.schedule.due(step)
    }

    fn measure(&mut self, net: &CenteredNetwork, step: u64) -> Result<Vec<f64>> {
        Ok(sharpness_probe(net, &self.batch, self.loss, &self.optimizer, step, &self.options)?.eigenvalues)
    }
}

/// Kernel-target alignment of a hidden layer's activation kernel.
/// Values: one per entry of `norms`, in order.
pub struct KtaProbe {
    pub batch: Batch,
    pub layer: usize,
    pub norms: Vec<MatrixNorm>,
    pub schedule: RecordSchedule,
}

impl Probe for KtaProbe {
    fn name(&self) -> &str {
        "kta"
    }

    fn due(&self, step: u64) -> bool {
        self.schedule.due(step)
    }

    fn measure(&mut self, net: &CenteredNetwork, _step: u64) -> Result<Vec<f64>> {
        let k = activation_kernel(net, &self.batch.inputs, self.layer)?;
        self.norms.iter().map(|&n| kta(&k, &self.batch.targets, n)).collect()
    }
}

/// Distance of every weight matrix from its initialization.
/// Values: one per layer, input layer first.
pub struct MovementProbe {
    pub norm: MatrixNorm,
    pub schedule: RecordSchedule,
}

impl Probe for MovementProbe {
    fn name(&self) -> &str {
        "movement"
    }

    fn due(&self, step: u64) -> bool {
        self.schedule.due(step)
    }

    fn measure(&mut self, net: &CenteredNetwork, _step: u64) -> Result<Vec<f64>> {
        (0..net.config().depth).map(|l| weight_movement(net, l, self.norm)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{SingleIndexTask, Task};
    use crate::nn::{init_network, train, NetworkConfig, Recorder};

    #[test]
    fn probes_stream_records_with_tau() {
        let task = SingleIndexTask::new(4, 2, 1.0, 0).unwrap();
        let mut net = init_network(NetworkConfig::mup(3, 8, 4, 1, 2.0)).unwrap();
        let every = RecordSchedule::Every { interval: 5 };
        let opt = OptimizerConfig::sgd(0.1);
        let mut rec = Recorder { schedule: every.clone(), ..Default::default() }
            .with(SharpnessProbe {
                batch: task.probe(16),
                loss: LossKind::Mse,
                optimizer: opt.clone(),
                schedule: every.clone(),
                options: SpectrumOptions { k: 2, ..Default::default() },
            })
            .with(KtaProbe { batch: task.probe(16), layer: 2, norms: MatrixNorm::ALL.to_vec(), schedule: every.clone() })
            .with(MovementProbe { norm: MatrixNorm::Frobenius, schedule: every });
        let report = train(&mut net, &task, LossKind::Mse, &opt, 10, 8, &mut rec).unwrap();
        let names: Vec<&str> = report.metrics.iter().map(|m| m.metric_name.as_str()).collect();
        assert_eq!(names.iter().filter(|n| **n == "sharpness").count(), 3);
        for m in &report.metrics {
            assert_eq!(m.tau, 0.1 * m.step as f64 / 2.0);
            match m.metric_name.as_str() {
                "sharpness" => assert_eq!(m.values.len(), 2),
                "kta" => assert!(m.values.iter().all(|v| (0.0..=1.0).contains(v) || *v <= 1.0 + 1e-12)),
                "movement" => assert_eq!(m.values.len(), 3),
                _ => unreachable!(),
            }
        }
        let first = report.metrics.iter().find(|m| m.metric_name == "movement").unwrap();
        assert!(first.values.iter().all(|&v| v == 0.0));
    }
}
