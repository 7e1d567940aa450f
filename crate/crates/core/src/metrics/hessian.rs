use nalgebra::{DMatrix, DVector};

use crate::data::Batch;
use crate::error::{Error, Result};
use crate::nn::{reverse, CenteredNetwork, ForwardPass, LossKind, NetworkConfig, ParamSet};

/// A network, a fixed batch and a loss, with the forward pass cached so that
/// repeated curvature products cost one tangent sweep each.
///
/// All products are with respect to the live weights of the batch loss
/// `loss(f~(theta))`, `f~ = (f(theta) - f(theta0)) / gamma`:
///
/// ```text
/// H v = G v + R v
/// G v = J^T loss'' J v / gamma^2
/// R v = sum_i loss'_i (d^2 f_i) v / gamma
/// ```
pub struct HessianContext<'a> {
    config: &'a NetworkConfig,
    params: &'a ParamSet,
    batch: &'a Batch,
    loss: LossKind,
    pass: ForwardPass,
    centered: DMatrix<f64>,
    /// `loss'(f~) / gamma`, the cotangent of the raw output.
    cotangent: DMatrix<f64>,
    shapes: Vec<(usize, usize)>,
}

/// Forward-mode tangents of the preactivations and the raw output.
struct Tangent {
    pre: Vec<DMatrix<f64>>,
    output: DMatrix<f64>,
}

impl<'a> HessianContext<'a> {
    pub fn new(net: &'a CenteredNetwork, batch: &'a Batch, loss: LossKind) -> Result<Self> {
        let config = net.config();
        if batch.targets.nrows() != config.output_dim {
            return Err(Error::Argument(format!(
                "targets have {} rows but the network has {} outputs",
                batch.targets.nrows(),
                config.output_dim
            )));
        }
        let eval = net.evaluate(&batch.inputs)?;
        let cotangent = loss.output_gradient(&eval.centered, &batch.targets) / config.gamma;
        Ok(Self {
            config,
            params: net.live(),
            batch,
            loss,
            pass: eval.pass,
            centered: eval.centered,
            cotangent,
            shapes: config.layer_shapes(),
        })
    }

    pub fn dim(&self) -> usize {
        self.shapes.iter().map(|(r, c)| r * c).sum()
    }

    pub fn loss_value(&self) -> f64 {
        self.loss.value(&self.centered, &self.batch.targets)
    }

    pub fn gradient(&self) -> DVector<f64> {
        reverse(self.config, self.params, &self.batch.inputs, &self.pass, &self.cotangent).to_flat()
    }

    fn unflatten(&self, v: &DVector<f64>) -> Result<ParamSet> {
        if v.len() != self.dim() {
            return Err(Error::Argument(format!(
                "vector has dimension {} but the network has {} parameters",
                v.len(),
                self.dim()
            )));
        }
        ParamSet::from_flat(&self.shapes, v)
    }

    fn tangent(&self, v: &ParamSet) -> Tangent {
        let cfg = self.config;
        let w = self.params.layers();
        let dv = v.layers();
        let x = &self.batch.inputs;
        let act = cfg.activation;
        let skip = cfg.skip();
        let mut dh = &dv[0] * x * cfg.layer_scale(0);
        let mut pre = Vec::with_capacity(cfg.depth.saturating_sub(1));
        for l in 1..cfg.depth {
            let h = &self.pass.pre[l - 1];
            let a = &self.pass.post[l - 1];
            let da = dh.zip_map(h, |d, h| d * act.derivative(h));
            let mut next = (&dv[l] * a + &w[l] * &da) * cfg.layer_scale(l);
            if skip != 0.0 && l + 1 < cfg.depth {
                next += &dh * skip;
            }
            pre.push(dh);
            dh = next;
        }
        Tangent { pre, output: dh }
    }

    /// Directional derivative along `v` of the reverse pass with the output
    /// cotangent held fixed: the second-derivative-of-`f` term.
    fn reverse_tangent(&self, v: &ParamSet, tan: &Tangent, cot: &DMatrix<f64>) -> ParamSet {
        let cfg = self.config;
        let depth = cfg.depth;
        let x = &self.batch.inputs;
        if depth == 1 {
            return ParamSet::zeros(&self.shapes);
        }
        let w = self.params.layers();
        let dv = v.layers();
        let act = cfg.activation;
        let skip = cfg.skip();
        let pre = &self.pass.pre;
        let post = &self.pass.post;
        let dpost = |l: usize| tan.pre[l].zip_map(&pre[l], |d, h| d * act.derivative(h));
        let mut out = vec![DMatrix::zeros(0, 0); depth];

        let top = depth - 1;
        let s = cfg.layer_scale(top);
        out[top] = cot * dpost(top - 1).transpose() * s;
        let up = w[top].tr_mul(cot) * s;
        let dup = dv[top].tr_mul(cot) * s;
        let mut delta = up.zip_map(&pre[top - 1], |g, h| g * act.derivative(h));
        let mut ddelta = dup.zip_map(&pre[top - 1], |g, h| g * act.derivative(h))
            + up.zip_zip_map(&pre[top - 1], &tan.pre[top - 1], |g, h, d| g * act.second_derivative(h) * d);
        for l in (1..top).rev() {
            let s = cfg.layer_scale(l);
            out[l] = (&ddelta * post[l - 1].transpose() + &delta * dpost(l - 1).transpose()) * s;
            let up = w[l].tr_mul(&delta) * s;
            let dup = (dv[l].tr_mul(&delta) + w[l].tr_mul(&ddelta)) * s;
            let mut below = up.zip_map(&pre[l - 1], |g, h| g * act.derivative(h));
            let mut dbelow = dup.zip_map(&pre[l - 1], |g, h| g * act.derivative(h))
                + up.zip_zip_map(&pre[l - 1], &tan.pre[l - 1], |g, h, d| g * act.second_derivative(h) * d);
            if skip != 0.0 {
                below += &delta * skip;
                dbelow += &ddelta * skip;
            }
            delta = below;
            ddelta = dbelow;
        }
        out[0] = &ddelta * x.transpose() * cfg.layer_scale(0);
        ParamSet::from_layers(out)
    }

    fn gauss_newton_from(&self, tan: &Tangent) -> ParamSet {
        let gamma = self.config.gamma;
        let df = &tan.output / gamma;
        let cot = self.loss.curvature_product(&self.centered, &self.batch.targets, &df) / gamma;
        reverse(self.config, self.params, &self.batch.inputs, &self.pass, &cot)
    }

    /// Exact Hessian-vector product of the batch loss.
    pub fn hvp(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        let p = self.unflatten(v)?;
        let tan = self.tangent(&p);
        let mut g = self.gauss_newton_from(&tan);
        g.axpy(1.0, &self.reverse_tangent(&p, &tan, &self.cotangent));
        Ok(g.to_flat())
    }

    pub fn gauss_newton_vp(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        let p = self.unflatten(v)?;
        Ok(self.gauss_newton_from(&self.tangent(&p)).to_flat())
    }

    pub fn residual_vp(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        let p = self.unflatten(v)?;
        let tan = self.tangent(&p);
        Ok(self.reverse_tangent(&p, &tan, &self.cotangent).to_flat())
    }

    /// `J v`: change of the centered outputs along `v`.
    pub fn jvp(&self, v: &DVector<f64>) -> Result<DMatrix<f64>> {
        let p = self.unflatten(v)?;
        Ok(self.tangent(&p).output / self.config.gamma)
    }
}

/// Which curvature operator to apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Curvature {
    Hessian,
    GaussNewton,
    Residual,
}

impl HessianContext<'_> {
    pub fn apply(&self, which: Curvature, v: &DVector<f64>) -> Result<DVector<f64>> {
        match which {
            Curvature::Hessian => self.hvp(v),
            Curvature::GaussNewton => self.gauss_newton_vp(v),
            Curvature::Residual => self.residual_vp(v),
        }
    }

    /// Dense matrix of an operator, one product per basis vector. Symmetrized.
    pub fn dense(&self, which: Curvature) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut e = DVector::zeros(n);
        for j in 0..n {
            e[j] = 1.0;
            m.set_column(j, &self.apply(which, &e)?);
            e[j] = 0.0;
        }
        Ok((&m + m.transpose()) * 0.5)
    }
}

pub fn hvp(net: &CenteredNetwork, batch: &Batch, loss: LossKind, v: &DVector<f64>) -> Result<DVector<f64>> {
    HessianContext::new(net, batch, loss)?.hvp(v)
}

pub fn gauss_newton_vp(net: &CenteredNetwork, batch: &Batch, loss: LossKind, v: &DVector<f64>) -> Result<DVector<f64>> {
    HessianContext::new(net, batch, loss)?.gauss_newton_vp(v)
}

pub fn residual_vp(net: &CenteredNetwork, batch: &Batch, loss: LossKind, v: &DVector<f64>) -> Result<DVector<f64>> {
    HessianContext::new(net, batch, loss)?.residual_vp(v)
}

pub fn dense_hessian(net: &CenteredNetwork, batch: &Batch, loss: LossKind) -> Result<DMatrix<f64>> {
    HessianContext::new(net, batch, loss)?.dense(Curvature::Hessian)
}
