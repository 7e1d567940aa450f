//! Learning-rate/richness phase portraits.
//!
//! Each gamma column descends a log-spaced learning-rate plan from above
//! until the first convergent cell, then keeps a few rates below it.
//! Columns run in parallel; results are ordered by grid position, so the
//! portrait does not depend on the number of workers.

mod cell;
mod engine;
mod grid;
mod portrait;
mod mlp_runner;
mod toy_runner;

pub use cell::{CellResult, CellRun, CellRunner, SweepCell};
pub use engine::{descend_eta, run_plan, run_sweep, Descent, SweepOptions, SweepReport, SWEEP_SCHEMA_VERSION};
pub use grid::{build_grid, log_points, GridPlan, GridSpec};
pub use portrait::{fit_boundary_slope, ols, Boundary, PhasePortrait, SlopeFit, LAZY_MAX_GAMMA, RICH_MIN_GAMMA};
pub use mlp_runner::{MlpArch, MlpRunner, MlpSpec, SharpnessSpec};
pub use toy_runner::ToyRunner;
