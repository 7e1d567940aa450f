use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
        }
    }

    #[inline]
    pub fn second_derivative(self, x: f64) -> f64 {
        match self {
            Activation::Identity | Activation::Relu => 0.0,
            Activation::Tanh => {
                let t = x.tanh();
                -2.0 * t * (1.0 - t * t)
            }
        }
    }
}

/// Architecture and parameterization of a centered MLP.
///
/// `depth` counts weight matrices: layer 0 maps the input to width `width`,
/// layers `1..depth-1` are `width x width`, and the last layer is the readout.
/// A depth-1 network is a linear readout straight from the input.
///
/// Forward equations (examples as columns):
///
/// ```text
/// h1      = W0 x / sqrt(D)
/// h(l+1)  = tau h(l) + W(l) phi(h(l)) / (sqrt(N) depth^alpha)
/// f       = W(L-1) phi(h(L-1)) / N        (depth >= 2)
/// f       = W0 x / sqrt(D)                (depth == 1)
/// ```
///
/// `tau = 0, alpha = 0` is muP; `tau = 1, alpha = 1/2` is Depth-muP. The
/// richness `gamma` divides the centered output only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub depth: usize,
    pub width: usize,
    pub input_dim: usize,
    pub output_dim: usize,
    pub activation: Activation,
    #[serde(default)]
    pub residual: bool,
    #[serde(default)]
    pub branch_exponent: f64,
    pub gamma: f64,
    #[serde(default)]
    pub seed: u64,
}

impl NetworkConfig {
    pub fn mup(depth: usize, width: usize, input_dim: usize, output_dim: usize, gamma: f64) -> Self {
        Self {
            depth,
            width,
            input_dim,
            output_dim,
            activation: Activation::Relu,
            residual: false,
            branch_exponent: 0.0,
            gamma,
            seed: 0,
        }
    }

    pub fn depth_mup(depth: usize, width: usize, input_dim: usize, output_dim: usize, gamma: f64) -> Self {
        Self { residual: true, branch_exponent: 0.5, ..Self::mup(depth, width, input_dim, output_dim, gamma) }
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::Config("depth must be at least 1".into()));
        }
        if self.width == 0 || self.input_dim == 0 || self.output_dim == 0 {
            return Err(Error::Config("width, input_dim and output_dim must be at least 1".into()));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be positive and finite, got {}", self.gamma)));
        }
        if self.branch_exponent != 0.0 && self.branch_exponent != 0.5 {
            return Err(Error::Config(format!(
                "branch_exponent must be 0 or 1/2, got {}",
                self.branch_exponent
            )));
        }
        Ok(())
    }

    /// `(rows, cols)` of every weight matrix, input layer first.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        if self.depth == 1 {
            return vec![(self.output_dim, self.input_dim)];
        }
        let mut shapes = Vec::with_capacity(self.depth);
        shapes.push((self.width, self.input_dim));
        for _ in 1..self.depth - 1 {
            shapes.push((self.width, self.width));
        }
        shapes.push((self.output_dim, self.width));
        shapes
    }

    pub fn param_count(&self) -> usize {
        self.layer_shapes().iter().map(|(r, c)| r * c).sum()
    }

    /// Multiplier applied to layer `l`'s matrix product in the forward pass.
    pub fn layer_scale(&self, layer: usize) -> f64 {
        let n = self.width as f64;
        if layer == 0 {
            1.0 / (self.input_dim as f64).sqrt()
        } else if layer + 1 == self.depth {
            1.0 / n
        } else {
            1.0 / (n.sqrt() * (self.depth as f64).powf(self.branch_exponent))
        }
    }

    /// Skip-connection coefficient tau.
    pub fn skip(&self) -> f64 {
        if self.residual {
            1.0
        } else {
            0.0
        }
    }
}
