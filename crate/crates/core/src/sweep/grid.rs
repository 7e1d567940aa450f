use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Richness and learning-rate grid for one phase portrait.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub gamma_lo: f64,
    pub gamma_hi: f64,
    pub gamma_per_decade: u32,
    pub eta_start: f64,
    pub eta_per_decade: u32,
    pub eta_floor: f64,
    /// Cells to run below the top convergent rate. `None` descends to the floor.
    #[serde(default = "default_keep_count")]
    pub keep_count: Option<usize>,
    /// Kept cells lie within this factor below the top convergent rate.
    #[serde(default = "default_keep_window")]
    pub keep_window: f64,
    pub steps: u64,
    #[serde(default = "default_batch")]
    pub batch: usize,
    #[serde(default)]
    pub seed: u64,
    /// Derive a distinct seed per cell instead of sharing `seed` across the grid.
    #[serde(default)]
    pub per_cell_seeds: bool,
}

fn default_keep_count() -> Option<usize> {
    Some(7)
}

fn default_keep_window() -> f64 {
    1e3
}

fn default_batch() -> usize {
    1
}

impl GridSpec {
    /// Grid with the default keep policy; callers fill in the rest with struct update syntax.
    pub fn new(gamma: (f64, f64, u32), eta: (f64, f64, u32), steps: u64) -> Self {
        Self {
            gamma_lo: gamma.0,
            gamma_hi: gamma.1,
            gamma_per_decade: gamma.2,
            eta_start: eta.0,
            eta_floor: eta.1,
            eta_per_decade: eta.2,
            keep_count: default_keep_count(),
            keep_window: default_keep_window(),
            steps,
            batch: default_batch(),
            seed: 0,
            per_cell_seeds: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !(positive(self.gamma_lo) && positive(self.gamma_hi) && self.gamma_lo <= self.gamma_hi) {
            return Err(Error::Config(format!("need 0 < gamma_lo <= gamma_hi, got [{}, {}]", self.gamma_lo, self.gamma_hi)));
        }
        if !(positive(self.eta_start) && positive(self.eta_floor) && self.eta_floor <= self.eta_start) {
            return Err(Error::Config(format!("need 0 < eta_floor <= eta_start, got {} and {}", self.eta_floor, self.eta_start)));
        }
        if self.gamma_per_decade == 0 || self.eta_per_decade == 0 {
            return Err(Error::Config("points per decade must be at least 1".into()));
        }
        if self.steps == 0 || self.batch == 0 {
            return Err(Error::Config("steps and batch must be at least 1".into()));
        }
        if self.keep_window.is_nan() || self.keep_window < 1.0 {
            return Err(Error::Config(format!("keep_window is a ratio >= 1, got {}", self.keep_window)));
        }
        Ok(())
    }

    pub fn cell_seed(&self, gamma_index: usize, eta_index: usize) -> u64 {
        if !self.per_cell_seeds {
            return self.seed;
        }
        // splitmix64 over the packed indices
        let mut z = self
            .seed
            .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(((gamma_index as u64) << 32 | eta_index as u64) + 1));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// Log-spaced values from `start` moving by `per_decade` steps per decade
/// towards `end`, inclusive of `end` when it lands on the lattice.
pub fn log_points(start: f64, end: f64, per_decade: u32) -> Vec<f64> {
    let (a, b) = (start.log10(), end.log10());
    let per = per_decade as f64;
    let span = (b - a) * per;
    let count = (span.abs() + 1e-9).floor() as i64;
    let dir = if b >= a { 1.0 } else { -1.0 };
    (0..=count)
        .map(|i| {
            if i == 0 {
                return start;
            }
            // exponent rounded to the lattice so decade points come out exact
            let e = a + dir * i as f64 / per;
            let snapped = (e * per).round() / per;
            let e = if (snapped - e).abs() < 1e-9 { snapped } else { e };
            10f64.powf(e)
        })
        .collect()
}

/// The expanded grid: ascending `gammas`, descending `etas`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPlan {
    pub gammas: Vec<f64>,
    pub etas: Vec<f64>,
}

pub fn build_grid(spec: &GridSpec) -> Result<GridPlan> {
    spec.validate()?;
    Ok(GridPlan {
        gammas: log_points(spec.gamma_lo, spec.gamma_hi, spec.gamma_per_decade),
        etas: log_points(spec.eta_start, spec.eta_floor, spec.eta_per_decade),
    })
}
