//! Online data streams.
//!
//! Every task is immutable after construction and serves batches as a pure
//! function of `(seed, step)`, so identical requests always return identical
//! data and batches at different steps are independent draws.

mod idx;
mod mixture;
mod single_index;

pub use idx::{load_idx, parse_idx_images, parse_idx_labels, IdxDataset, IdxTask};
pub use mixture::MixtureTask;
pub use single_index::SingleIndexTask;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Size of the held-out probe set used for test metrics.
pub const DEFAULT_PROBE_SIZE: usize = 2048;

// Stream ids reserved for non-training draws. Training batches use the step index.
pub(crate) const PROBE_STREAM: u64 = u64::MAX;
pub(crate) const PARAM_STREAM: u64 = u64::MAX - 1;
pub(crate) const CALIBRATION_STREAM: u64 = u64::MAX - 2;

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One minibatch. Examples are stored column-wise: `inputs` is `D x B`,
/// `targets` is `C x B`.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub inputs: DMatrix<f64>,
    pub targets: DMatrix<f64>,
    pub step: u64,
}

impl Batch {
    pub fn new(inputs: DMatrix<f64>, targets: DMatrix<f64>, step: u64) -> Result<Self> {
        if inputs.ncols() == 0 {
            return Err(Error::Argument("batch must hold at least one example".into()));
        }
        if inputs.ncols() != targets.ncols() {
            return Err(Error::Argument(format!(
                "inputs hold {} examples but targets hold {}",
                inputs.ncols(),
                targets.ncols()
            )));
        }
        Ok(Self { inputs, targets, step })
    }

    pub fn len(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.ncols() == 0
    }

    /// Class index of each example (argmax of its target column).
    pub fn classes(&self) -> Vec<usize> {
        self.targets.column_iter().map(|c| argmax(c.iter().copied())).collect()
    }

    /// Checks the one-hot invariant required by cross-entropy training.
    pub fn check_one_hot(&self) -> Result<()> {
        for (j, col) in self.targets.column_iter().enumerate() {
            let sum: f64 = col.iter().sum();
            let binary = col.iter().all(|&v| v == 0.0 || v == 1.0);
            if !binary || (sum - 1.0).abs() > 1e-12 {
                return Err(Error::Validation(format!("target column {j} is not one-hot")));
            }
        }
        Ok(())
    }
}

pub(crate) fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// An online data stream.
pub trait Task: Send + Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;

    /// True when targets are one-hot class labels.
    fn is_classification(&self) -> bool;

    /// Training batch for `step`; deterministic in `(task seed, step)`.
    fn next_batch(&self, size: usize, step: u64) -> Batch;

    /// Fixed held-out probe set, disjoint from every training stream.
    fn probe(&self, size: usize) -> Batch;
}

/// Serializable task definition, embedded in run and sweep specs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TaskSpec {
    SingleIndex {
        dim: usize,
        #[serde(default = "one_u32")]
        k: u32,
        #[serde(default = "one_f64")]
        scale: f64,
        seed: u64,
        #[serde(default)]
        normalize: bool,
    },
    Mixture {
        dim: usize,
        classes: usize,
        #[serde(default = "one_f64")]
        separation: f64,
        #[serde(default = "one_f64")]
        noise: f64,
        seed: u64,
    },
    Idx {
        images: String,
        labels: String,
        seed: u64,
    },
}

fn one_u32() -> u32 {
    1
}

fn one_f64() -> f64 {
    1.0
}

impl TaskSpec {
    pub fn build(&self) -> Result<Box<dyn Task>> {
        Ok(match self {
            TaskSpec::SingleIndex { dim, k, scale, seed, normalize } => {
                let task = SingleIndexTask::new(*dim, *k, *scale, *seed)?;
                Box::new(if *normalize { task.normalized() } else { task })
            }
            TaskSpec::Mixture { dim, classes, separation, noise, seed } => {
                Box::new(MixtureTask::new(*dim, *classes, *separation, *noise, *seed)?)
            }
            TaskSpec::Idx { images, labels, seed } => {
                Box::new(IdxTask::new(load_idx(images, labels)?, *seed)?)
            }
        })
    }
}
