use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Dense weight matrices of a network, input layer first.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet {
    layers: Vec<DMatrix<f64>>,
}

impl ParamSet {
    pub fn from_layers(layers: Vec<DMatrix<f64>>) -> Self {
        Self { layers }
    }

    pub fn zeros(shapes: &[(usize, usize)]) -> Self {
        Self { layers: shapes.iter().map(|&(r, c)| DMatrix::zeros(r, c)).collect() }
    }

    pub fn layers(&self) -> &[DMatrix<f64>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DMatrix<f64>] {
        &mut self.layers
    }

    pub fn layer(&self, index: usize) -> &DMatrix<f64> {
        &self.layers[index]
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(|m| m.shape()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|m| m.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|m| m.iter().all(|v| v.is_finite()))
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &ParamSet) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.zip_apply(b, |x, y| *x += alpha * y);
        }
    }

    pub fn dot(&self, other: &ParamSet) -> f64 {
        self.layers.iter().zip(&other.layers).map(|(a, b)| a.dot(b)).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Concatenates all entries (column-major within each layer).
    pub fn to_flat(&self) -> DVector<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for m in &self.layers {
            out.extend_from_slice(m.as_slice());
        }
        DVector::from_vec(out)
    }

    pub fn from_flat(shapes: &[(usize, usize)], flat: &DVector<f64>) -> Result<Self> {
        let total: usize = shapes.iter().map(|(r, c)| r * c).sum();
        if flat.len() != total {
            return Err(Error::Argument(format!(
                "vector has {} entries but the parameter set has {total}",
                flat.len()
            )));
        }
        let mut offset = 0;
        let layers = shapes
            .iter()
            .map(|&(r, c)| {
                let m = DMatrix::from_column_slice(r, c, &flat.as_slice()[offset..offset + r * c]);
                offset += r * c;
                m
            })
            .collect();
        Ok(Self { layers })
    }
}
