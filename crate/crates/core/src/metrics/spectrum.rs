use serde::{Deserialize, Serialize};

use super::hessian::{Curvature, HessianContext};
use super::lanczos::{default_iters, lanczos_topk};
use crate::data::Batch;
use crate::error::{Error, Result};
use crate::nn::{CenteredNetwork, LossKind, OptimizerConfig};

/// Top of the curvature spectrum at one step.
///
/// Eigenvalues are in the optimizer's own coordinates: the batch-loss Hessian
/// times the per-weight rate factor (`N` for SGD), so that an SGD step is
/// stable along an eigendirection when `lambda * eta / 2 < 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub step: u64,
    pub eigenvalues: Vec<f64>,
    pub sharpness: f64,
    /// `sharpness * eta / 2`.
    pub ratio: f64,
    pub gauss_newton_top: Option<f64>,
    pub residual_top: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    pub k: usize,
    pub iters: Option<usize>,
    pub seed: u64,
    /// Also compute the top eigenvalue of the Gauss-Newton and residual terms.
    pub split: bool,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { k: 1, iters: None, seed: 0, split: false }
    }
}

fn top_of(ctx: &HessianContext<'_>, which: Curvature, scale: f64, k: usize, opts: &SpectrumOptions) -> Result<Vec<f64>> {
    let dim = ctx.dim();
    let iters = opts.iters.unwrap_or_else(|| default_iters(k)).min(dim);
    let k = k.min(iters);
    let values = lanczos_topk(|v| ctx.apply(which, v), dim, k, iters, opts.seed)?;
    Ok(values.into_iter().map(|x| x * scale).collect())
}

/// Sharpness of `net` on a fixed batch, for edge-of-stability tracking.
pub fn sharpness_probe(
    net: &CenteredNetwork,
    batch: &Batch,
    loss: LossKind,
    opt: &OptimizerConfig,
    step: u64,
    opts: &SpectrumOptions,
) -> Result<SpectrumReport> {
    if opts.k == 0 {
        return Err(Error::Argument("k must be at least 1".into()));
    }
    let ctx = HessianContext::new(net, batch, loss)?;
    let scale = opt.rate_scale(net.config().width);
    let eigenvalues = top_of(&ctx, Curvature::Hessian, scale, opts.k, opts)?;
    let (gauss_newton_top, residual_top) = if opts.split {
        (
            top_of(&ctx, Curvature::GaussNewton, scale, 1, opts)?.first().copied(),
            top_of(&ctx, Curvature::Residual, scale, 1, opts)?.first().copied(),
        )
    } else {
        (None, None)
    };
    let sharpness = eigenvalues[0];
    Ok(SpectrumReport {
        step,
        sharpness,
        ratio: sharpness * opt.rate_at(step) / 2.0,
        eigenvalues,
        gauss_newton_top,
        residual_top,
    })
}
