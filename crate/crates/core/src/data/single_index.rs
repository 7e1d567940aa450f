use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use super::{stream_rng, Batch, Task, CALIBRATION_STREAM, PARAM_STREAM, PROBE_STREAM};
use crate::error::{Error, Result};

const CALIBRATION_DRAWS: usize = 100_000;

/// Single-index regression `y = c (w . x)^k` with `x ~ N(0, I_D)` and a unit direction `w`.
#[derive(Clone, Debug)]
pub struct SingleIndexTask {
    direction: DVector<f64>,
    k: u32,
    scale: f64,
    seed: u64,
}

impl SingleIndexTask {
    /// Samples the direction from `N(0, I)` under `seed` and normalizes it.
    pub fn new(dim: usize, k: u32, scale: f64, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("single-index input dimension must be at least 1".into()));
        }
        let mut rng = stream_rng(seed, PARAM_STREAM);
        let raw = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
        Self::with_direction(raw, k, scale, seed)
    }

    /// Uses the given direction (normalized to unit length).
    pub fn with_direction(direction: DVector<f64>, k: u32, scale: f64, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("single-index exponent k must be at least 1".into()));
        }
        if !scale.is_finite() {
            return Err(Error::Config("single-index scale must be finite".into()));
        }
        let norm = direction.norm();
        if direction.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(Error::Config("single-index direction must be a nonzero finite vector".into()));
        }
        Ok(Self { direction: direction / norm, k, scale, seed })
    }

    /// Rescales targets so their variance is one, estimated on a dedicated calibration draw.
    pub fn normalized(mut self) -> Self {
        let mut rng = stream_rng(self.seed, CALIBRATION_STREAM);
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for i in 0..CALIBRATION_DRAWS {
            let x = DVector::from_fn(self.direction.len(), |_, _| StandardNormal.sample(&mut rng));
            let y = self.target(&x);
            let delta = y - mean;
            mean += delta / (i + 1) as f64;
            m2 += delta * (y - mean);
        }
        let std = (m2 / (CALIBRATION_DRAWS - 1) as f64).sqrt();
        if std > 0.0 {
            self.scale /= std;
        }
        self
    }

    pub fn direction(&self) -> &DVector<f64> {
        &self.direction
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn target(&self, x: &DVector<f64>) -> f64 {
        self.scale * self.direction.dot(x).powi(self.k as i32)
    }

    fn draw(&self, size: usize, stream: u64, step: u64) -> Batch {
        let mut rng = stream_rng(self.seed, stream);
        let dim = self.direction.len();
        let inputs = DMatrix::from_fn(dim, size, |_, _| StandardNormal.sample(&mut rng));
        let targets = DMatrix::from_fn(1, size, |_, j| {
            let proj = self.direction.dot(&inputs.column(j));
            self.scale * proj.powi(self.k as i32)
        });
        Batch { inputs, targets, step }
    }
}

impl Task for SingleIndexTask {
    fn input_dim(&self) -> usize {
        self.direction.len()
    }

    fn output_dim(&self) -> usize {
        1
    }

    fn is_classification(&self) -> bool {
        false
    }

    fn next_batch(&self, size: usize, step: u64) -> Batch {
        self.draw(size, step, step)
    }

    fn probe(&self, size: usize) -> Batch {
        self.draw(size, PROBE_STREAM, 0)
    }
}
