use serde::{Deserialize, Serialize};

use crate::data::Batch;
use crate::error::{Error, Result};
use crate::nn::CenteredNetwork;

pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Argument(format!("series have lengths {} and {}", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::Undefined("correlation needs at least two points".into()));
    }
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Undefined("correlation of a constant series".into()));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Average ranks, ties sharing the mean of their positions.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let mean = (i + j) as f64 / 2.0;
        for &k in &order[i..=j] {
            r[k] = mean;
        }
        i = j + 1;
    }
    r
}

pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Argument(format!("series have lengths {} and {}", a.len(), b.len())));
    }
    pearson(&ranks(a), &ranks(b))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionAgreement {
    /// `(f~_A, f~_B)` on each probe example's true-class output.
    pub pairs: Vec<(f64, f64)>,
    pub pearson: f64,
}

/// Compares two networks on the true-class coordinate of their outputs.
pub fn function_agreement(a: &CenteredNetwork, b: &CenteredNetwork, probe: &Batch) -> Result<FunctionAgreement> {
    if a.config().output_dim != b.config().output_dim || a.config().output_dim != probe.targets.nrows() {
        return Err(Error::Argument("networks and probe set disagree on the output dimension".into()));
    }
    let fa = a.centered_forward(&probe.inputs)?;
    let fb = b.centered_forward(&probe.inputs)?;
    let classes = if probe.targets.nrows() == 1 { vec![0; probe.len()] } else { probe.classes() };
    let pairs: Vec<(f64, f64)> = classes.iter().enumerate().map(|(j, &c)| (fa[(c, j)], fb[(c, j)])).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    let pearson = pearson(&xs, &ys)?;
    Ok(FunctionAgreement { pairs, pearson })
}
