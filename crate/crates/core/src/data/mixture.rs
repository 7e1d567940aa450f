use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{stream_rng, Batch, Task, PARAM_STREAM, PROBE_STREAM};
use crate::error::{Error, Result};

/// Gaussian-mixture classification with one-hot targets and uniformly drawn classes.
#[derive(Clone, Debug)]
pub struct MixtureTask {
    means: DMatrix<f64>,
    noise: f64,
    seed: u64,
}

impl MixtureTask {
    /// Class means are drawn from `N(0, I)` and rescaled to norm `separation`.
    pub fn new(dim: usize, classes: usize, separation: f64, noise: f64, seed: u64) -> Result<Self> {
        if dim == 0 || classes < 2 {
            return Err(Error::Config("mixture needs dim >= 1 and at least two classes".into()));
        }
        if !(noise >= 0.0 && noise.is_finite() && separation.is_finite()) {
            return Err(Error::Config("mixture noise and separation must be finite, noise >= 0".into()));
        }
        let mut rng = stream_rng(seed, PARAM_STREAM);
        let mut means = DMatrix::from_fn(dim, classes, |_, _| StandardNormal.sample(&mut rng));
        for mut col in means.column_iter_mut() {
            let norm = col.norm();
            if norm > 0.0 {
                col *= separation / norm;
            }
        }
        Ok(Self { means, noise, seed })
    }

    pub fn classes(&self) -> usize {
        self.means.ncols()
    }

    fn draw(&self, size: usize, stream: u64, step: u64) -> Batch {
        let mut rng = stream_rng(self.seed, stream);
        let dim = self.means.nrows();
        let mut inputs = DMatrix::zeros(dim, size);
        let mut targets = DMatrix::zeros(self.classes(), size);
        for j in 0..size {
            let class = rng.random_range(0..self.classes());
            targets[(class, j)] = 1.0;
            for i in 0..dim {
                let z: f64 = StandardNormal.sample(&mut rng);
                inputs[(i, j)] = self.means[(i, class)] + self.noise * z;
            }
        }
        Batch { inputs, targets, step }
    }
}

impl Task for MixtureTask {
    fn input_dim(&self) -> usize {
        self.means.nrows()
    }

    fn output_dim(&self) -> usize {
        self.classes()
    }

    fn is_classification(&self) -> bool {
        true
    }

    fn next_batch(&self, size: usize, step: u64) -> Batch {
        self.draw(size, step, step)
    }

    fn probe(&self, size: usize) -> Batch {
        self.draw(size, PROBE_STREAM, 0)
    }
}
