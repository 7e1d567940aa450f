use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::argmax;

/// Per-example loss on the centered, rescaled output, averaged over the batch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LossKind {
    /// `1/2 |f - y|^2`
    #[serde(rename = "mse")]
    Mse,
    /// Softmax followed by negative log-likelihood of the target distribution.
    #[serde(rename = "xent")]
    SoftmaxCrossEntropy,
}

fn log_sum_exp(col: &[f64]) -> f64 {
    let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + col.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

pub(crate) fn softmax(output: &DMatrix<f64>) -> DMatrix<f64> {
    let mut p = output.clone();
    for mut col in p.column_iter_mut() {
        let lse = log_sum_exp(col.as_slice());
        col.apply(|v| *v = (*v - lse).exp());
    }
    p
}

impl LossKind {
    pub fn value(self, output: &DMatrix<f64>, targets: &DMatrix<f64>) -> f64 {
        let b = output.ncols() as f64;
        match self {
            LossKind::Mse => 0.5 * (output - targets).norm_squared() / b,
            LossKind::SoftmaxCrossEntropy => {
                let mut total = 0.0;
                for (f, y) in output.column_iter().zip(targets.column_iter()) {
                    let lse = log_sum_exp(f.as_slice());
                    total += y.iter().zip(f.iter()).map(|(y, f)| y * (lse - f)).sum::<f64>();
                }
                total / b
            }
        }
    }

    /// Derivative of the batch loss with respect to the output (includes the `1/B`).
    pub fn output_gradient(self, output: &DMatrix<f64>, targets: &DMatrix<f64>) -> DMatrix<f64> {
        let b = output.ncols() as f64;
        match self {
            LossKind::Mse => (output - targets) / b,
            LossKind::SoftmaxCrossEntropy => {
                let mut g = softmax(output);
                for (mut gc, y) in g.column_iter_mut().zip(targets.column_iter()) {
                    let mass: f64 = y.iter().sum();
                    gc.zip_apply(&y, |p, y| *p = *p * mass - y);
                }
                g / b
            }
        }
    }

    /// Applies the output-space loss Hessian (including `1/B`) to a direction.
    pub fn curvature_product(
        self,
        output: &DMatrix<f64>,
        targets: &DMatrix<f64>,
        direction: &DMatrix<f64>,
    ) -> DMatrix<f64> {
        let b = output.ncols() as f64;
        match self {
            LossKind::Mse => direction / b,
            LossKind::SoftmaxCrossEntropy => {
                let p = softmax(output);
                let mut out = DMatrix::zeros(output.nrows(), output.ncols());
                for j in 0..output.ncols() {
                    let mass: f64 = targets.column(j).sum();
                    let pc = p.column(j);
                    let dc = direction.column(j);
                    let mean = pc.dot(&dc);
                    for i in 0..output.nrows() {
                        out[(i, j)] = mass * pc[i] * (dc[i] - mean) / b;
                    }
                }
                out
            }
        }
    }
}

/// Fraction of examples whose argmax output matches the argmax target.
pub fn accuracy(output: &DMatrix<f64>, targets: &DMatrix<f64>) -> f64 {
    let hits = output
        .column_iter()
        .zip(targets.column_iter())
        .filter(|(f, y)| argmax(f.iter().copied()) == argmax(y.iter().copied()))
        .count();
    hits as f64 / output.ncols() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (DMatrix<f64>, DMatrix<f64>) {
        let out = DMatrix::from_column_slice(3, 2, &[0.3, -1.2, 2.0, 0.1, 0.5, -0.4]);
        let y = DMatrix::from_column_slice(3, 2, &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        (out, y)
    }

    #[test]
    fn gradients_match_finite_differences() {
        let (out, y) = fixture();
        for loss in [LossKind::Mse, LossKind::SoftmaxCrossEntropy] {
            let g = loss.output_gradient(&out, &y);
            for k in 0..out.len() {
                let h = 1e-6;
                let mut p = out.clone();
                p[k] += h;
                let mut m = out.clone();
                m[k] -= h;
                let fd = (loss.value(&p, &y) - loss.value(&m, &y)) / (2.0 * h);
                assert!((fd - g[k]).abs() < 1e-8, "{loss:?} entry {k}");
            }
        }
    }

    #[test]
    fn curvature_matches_gradient_differences() {
        let (out, y) = fixture();
        let dir = DMatrix::from_column_slice(3, 2, &[0.2, 0.7, -0.5, 1.0, -0.3, 0.4]);
        for loss in [LossKind::Mse, LossKind::SoftmaxCrossEntropy] {
            let h = 1e-6;
            let fd = (loss.output_gradient(&(&out + &dir * h), &y)
                - loss.output_gradient(&(&out - &dir * h), &y))
                / (2.0 * h);
            let exact = loss.curvature_product(&out, &y, &dir);
            assert!((fd - exact).amax() < 1e-8);
        }
    }

    #[test]
    fn xent_survives_huge_logits() {
        let out = DMatrix::from_column_slice(2, 1, &[1e4, -1e4]);
        let y = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let v = LossKind::SoftmaxCrossEntropy.value(&out, &y);
        assert!((v - 2e4).abs() < 1e-6);
    }

    #[test]
    fn accuracy_counts_argmax_hits() {
        let (out, y) = fixture();
        assert_eq!(accuracy(&out, &y), 0.5);
    }
}
