use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Default Krylov dimension for `k` requested eigenvalues.
pub fn default_iters(k: usize) -> usize {
    (4 * k).max(40)
}

/// Top-`k` Ritz values of a symmetric operator, descending.
///
/// Full reorthogonalization against every previous Lanczos vector. The start
/// vector is a seeded random unit vector. On breakdown (an invariant subspace
/// is found) the Ritz values of that subspace are returned, possibly fewer than `k`.
pub fn lanczos_topk<F>(mut op: F, dim: usize, k: usize, iters: usize, seed: u64) -> Result<Vec<f64>>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    if k == 0 || k > iters || iters > dim {
        return Err(Error::Argument(format!("need 0 < k <= iters <= dim, got k={k} iters={iters} dim={dim}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
    q /= q.norm();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(iters);
    let mut alpha = Vec::with_capacity(iters);
    let mut beta: Vec<f64> = Vec::with_capacity(iters);
    let mut scale = 0.0f64;
    for _ in 0..iters {
        let mut w = op(&q)?;
        if w.len() != dim {
            return Err(Error::Argument(format!("operator returned dimension {} instead of {dim}", w.len())));
        }
        if !w.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite { stage: "lanczos", step: None });
        }
        let a = q.dot(&w);
        alpha.push(a);
        basis.push(q.clone());
        for _ in 0..2 {
            for v in &basis {
                let c = v.dot(&w);
                w.axpy(-c, v, 1.0);
            }
        }
        let b = w.norm();
        scale = scale.max(a.abs()).max(b);
        if basis.len() == iters || b <= 1e-13 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        beta.push(b);
        q = w / b;
    }
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let mut ritz: Vec<f64> = SymmetricEigen::new(t).eigenvalues.iter().copied().collect();
    ritz.sort_by(|a, b| b.total_cmp(a));
    ritz.truncate(k);
    Ok(ritz)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(values: Vec<f64>) -> impl FnMut(&DVector<f64>) -> Result<DVector<f64>> {
        let d = DVector::from_vec(values);
        move |v: &DVector<f64>| Ok(v.component_mul(&d))
    }

    #[test]
    fn diagonal_top_one() {
        let top = lanczos_topk(diag(vec![1.0, 3.0, 2.0]), 3, 1, 3, 0).unwrap();
        assert!((top[0] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn psd_operator_gives_nonnegative_ritz_values() {
        let d: Vec<f64> = (0..60).map(|i| (i as f64 * 0.37).sin().abs()).collect();
        let top = lanczos_topk(diag(d.clone()), 60, 10, 60, 4).unwrap();
        assert!(top.iter().all(|&x| x >= -1e-10));
        assert!(top.windows(2).all(|w| w[0] >= w[1]));
        let mut sorted = d;
        sorted.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in top.iter().zip(&sorted) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn breakdown_returns_converged_subset() {
        let top = lanczos_topk(diag(vec![2.0, 2.0, 2.0, 2.0]), 4, 3, 4, 1).unwrap();
        assert_eq!(top.len(), 1);
        assert!((top[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_given_seed() {
        let d: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let a = lanczos_topk(diag(d.clone()), 50, 3, 10, 9).unwrap();
        let b = lanczos_topk(diag(d), 50, 3, 10, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(lanczos_topk(diag(vec![1.0]), 1, 2, 1, 0).is_err());
        assert!(lanczos_topk(diag(vec![1.0]), 1, 1, 2, 0).is_err());
    }
}
