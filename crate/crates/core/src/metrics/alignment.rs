use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::CenteredNetwork;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixNorm {
    Frobenius,
    Operator,
    Nuclear,
}

impl MatrixNorm {
    pub const ALL: [MatrixNorm; 3] = [MatrixNorm::Frobenius, MatrixNorm::Operator, MatrixNorm::Nuclear];

    pub fn as_str(self) -> &'static str {
        match self {
            MatrixNorm::Frobenius => "frobenius",
            MatrixNorm::Operator => "operator",
            MatrixNorm::Nuclear => "nuclear",
        }
    }

    /// Norm of a symmetric matrix.
    pub fn of_symmetric(self, k: &DMatrix<f64>) -> f64 {
        match self {
            MatrixNorm::Frobenius => k.norm(),
            MatrixNorm::Operator => SymmetricEigen::new(k.clone()).eigenvalues.amax(),
            MatrixNorm::Nuclear => SymmetricEigen::new(k.clone()).eigenvalues.iter().map(|x| x.abs()).sum(),
        }
    }

    /// Norm of an arbitrary matrix.
    pub fn of(self, m: &DMatrix<f64>) -> f64 {
        match self {
            MatrixNorm::Frobenius => m.norm(),
            MatrixNorm::Operator => m.clone().svd(false, false).singular_values.max(),
            MatrixNorm::Nuclear => m.clone().svd(false, false).singular_values.sum(),
        }
    }
}

/// Kernel-target alignment at one step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub step: u64,
    pub tau: f64,
    pub kta: Vec<(MatrixNorm, f64)>,
    pub cka: Option<f64>,
}

fn check_symmetric(k: &DMatrix<f64>) -> Result<()> {
    if !k.is_square() {
        return Err(Error::Argument(format!("kernel is {}x{}, not square", k.nrows(), k.ncols())));
    }
    let scale = k.amax().max(f64::MIN_POSITIVE);
    for i in 0..k.nrows() {
        for j in 0..i {
            if (k[(i, j)] - k[(j, i)]).abs() > 1e-8 * scale {
                return Err(Error::Argument(format!("kernel is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// `tr(Y K Y^T) / (||K|| ||Y||_F^2)` for a `P x P` kernel and targets `Y`
/// given as `C x P` (examples as columns, as in a batch).
pub fn kta(k: &DMatrix<f64>, y: &DMatrix<f64>, norm: MatrixNorm) -> Result<f64> {
    check_symmetric(k)?;
    if y.ncols() != k.nrows() {
        return Err(Error::Argument(format!("targets hold {} examples but the kernel is {}x{}", y.ncols(), k.nrows(), k.ncols())));
    }
    let knorm = norm.of_symmetric(k);
    let ynorm = y.norm_squared();
    if knorm == 0.0 || ynorm == 0.0 {
        return Err(Error::Undefined("kernel-target alignment of a zero kernel or zero targets".into()));
    }
    let yk = y * k;
    Ok(yk.dot(y) / (knorm * ynorm))
}

/// Linear CKA between two kernels after double centering.
pub fn cka(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != b.shape() || !a.is_square() {
        return Err(Error::Argument(format!("kernels have shapes {:?} and {:?}", a.shape(), b.shape())));
    }
    let ac = double_center(a);
    let bc = double_center(b);
    let (na, nb) = (ac.norm(), bc.norm());
    if na <= 1e-12 * a.norm() || nb <= 1e-12 * b.norm() {
        return Err(Error::Undefined("centered kernel has zero norm".into()));
    }
    Ok(ac.dot(&bc) / (na * nb))
}

fn double_center(k: &DMatrix<f64>) -> DMatrix<f64> {
    let rows = k.row_mean();
    let cols = k.column_mean();
    let all = k.mean();
    DMatrix::from_fn(k.nrows(), k.ncols(), |i, j| k[(i, j)] - cols[i] - rows[j] + all)
}

/// Gram matrix `phi(h_l)^T phi(h_l) / N` over the columns of `inputs`, for
/// hidden layer `layer` in `1..depth`.
pub fn activation_kernel(net: &CenteredNetwork, inputs: &DMatrix<f64>, layer: usize) -> Result<DMatrix<f64>> {
    let depth = net.config().depth;
    if layer == 0 || layer >= depth {
        return Err(Error::Argument(format!("layer must lie in 1..{depth}, got {layer}")));
    }
    let pass = net.forward(inputs)?;
    let a = &pass.post[layer - 1];
    let k = a.tr_mul(a) / net.config().width as f64;
    Ok((&k + k.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_network, NetworkConfig};

    fn row(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(1, v.len(), v)
    }

    #[test]
    fn rank_one_alignment_is_one() {
        let y = row(&[1.0, -2.0, 0.5, 3.0]);
        let k = y.transpose() * &y;
        assert!((kta(&k, &y, MatrixNorm::Nuclear).unwrap() - 1.0).abs() < 1e-12);
        assert!((kta(&k, &y, MatrixNorm::Frobenius).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_kernel_gives_inverse_count() {
        let y = row(&[0.5, 0.5, 0.5, 0.5]);
        let k = DMatrix::identity(4, 4);
        assert!((kta(&k, &y, MatrixNorm::Nuclear).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_kernel_gives_zero() {
        let y = row(&[1.0, 1.0, 0.0]);
        let z = row(&[1.0, -1.0, 2.0]);
        let k = z.transpose() * &z;
        assert!(kta(&k, &y, MatrixNorm::Nuclear).unwrap().abs() < 1e-12);
    }

    #[test]
    fn rejects_asymmetric_and_zero() {
        let y = row(&[1.0, 1.0]);
        let k = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(kta(&k, &y, MatrixNorm::Nuclear), Err(Error::Argument(_))));
        assert!(matches!(kta(&DMatrix::zeros(2, 2), &y, MatrixNorm::Nuclear), Err(Error::Undefined(_))));
    }

    #[test]
    fn multiclass_reduces_to_trace_form() {
        let y = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 1.0]);
        let k = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0]);
        let expected = (y.clone() * &k * y.transpose()).trace() / (4.0 * 3.0);
        assert!((kta(&k, &y, MatrixNorm::Nuclear).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn cka_invariances() {
        let x = DMatrix::from_fn(3, 6, |i, j| ((i * 7 + j * 3) as f64).sin());
        let k = x.tr_mul(&x);
        assert!((cka(&k, &k).unwrap() - 1.0).abs() < 1e-12);
        assert!((cka(&k, &(&k * 3.5)).unwrap() - 1.0).abs() < 1e-12);
        let shifted = k.map(|v| v + 2.0);
        let other = DMatrix::from_fn(6, 6, |i, j| ((i + 1) * (j + 1)) as f64 + if i == j { 1.0 } else { 0.0 });
        assert!((cka(&shifted, &other).unwrap() - cka(&k, &other).unwrap()).abs() < 1e-12);
        assert!(matches!(cka(&k, &DMatrix::from_element(6, 6, 1.0)), Err(Error::Undefined(_))));
    }

    #[test]
    fn activation_kernel_is_psd_and_sees_duplicates() {
        let net = init_network(NetworkConfig::mup(3, 16, 4, 1, 1.0)).unwrap();
        let mut x = DMatrix::from_fn(4, 6, |i, j| ((i * 5 + j) as f64).cos());
        let dup = x.column(0).clone_owned();
        x.set_column(5, &dup);
        for layer in 1..3 {
            let k = activation_kernel(&net, &x, layer).unwrap();
            assert_eq!(k.row(0), k.row(5));
            assert!(SymmetricEigen::new(k).eigenvalues.min() >= -1e-10);
        }
        assert!(activation_kernel(&net, &x, 3).is_err());
        assert!(activation_kernel(&net, &x, 0).is_err());
    }

    #[test]
    fn frobenius_dominates_operator() {
        let m = DMatrix::from_fn(4, 3, |i, j| (i as f64 - j as f64 * 0.3).sin());
        assert!(MatrixNorm::Frobenius.of(&m) >= MatrixNorm::Operator.of(&m));
        assert!(MatrixNorm::Nuclear.of(&m) >= MatrixNorm::Frobenius.of(&m));
    }
}
