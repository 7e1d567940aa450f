//! Deterministic double-precision training of centered muP / Depth-muP MLPs.

mod config;
mod loss;
mod network;
mod optim;
mod params;
mod record;
mod snapshot;
mod train;

pub use config::{Activation, NetworkConfig};
pub use loss::{accuracy, LossKind};
pub use network::{init_network, CenteredNetwork, Evaluation, ForwardPass, Gradient};
pub(crate) use network::reverse;
pub use optim::{step, OptimizerConfig, OptimizerKind, Schedule};
pub(crate) use optim::sign;
pub use params::ParamSet;
pub use record::{read_jsonl, write_jsonl, MetricRecord, RecordSchedule, TrajectoryRecord};
pub use snapshot::{read_snapshot, write_snapshot, SnapshotHeader};
pub use train::{train, Probe, Recorder, RunStatus, TrainReport, DIVERGENCE_FACTOR};
