use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use super::{LossKind, NetworkConfig, ParamSet};
use crate::data::{stream_rng, Batch};
use crate::error::{Error, Result};

/// A network trained as the difference between its live weights and a frozen
/// copy of its initialization, divided by `gamma`.
#[derive(Clone, Debug, PartialEq)]
pub struct CenteredNetwork {
    config: NetworkConfig,
    live: ParamSet,
    frozen: ParamSet,
}

/// Activations kept from a forward pass. Examples are columns.
#[derive(Clone, Debug)]
pub struct ForwardPass {
    /// Preactivations `h1 .. h(L-1)`; empty for a depth-1 network.
    pub pre: Vec<DMatrix<f64>>,
    /// `phi(h)` for each entry of `pre`.
    pub post: Vec<DMatrix<f64>>,
    /// Raw output `f` before centering and the `1/gamma` factor.
    pub output: DMatrix<f64>,
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub pass: ForwardPass,
    pub centered: DMatrix<f64>,
}

#[derive(Clone, Debug)]
pub struct Gradient {
    pub loss: f64,
    pub params: ParamSet,
}

/// Draws every weight i.i.d. from `N(0, 1)` under `config.seed` and freezes a copy.
pub fn init_network(config: NetworkConfig) -> Result<CenteredNetwork> {
    config.validate()?;
    let mut rng = stream_rng(config.seed, 0);
    let layers = config
        .layer_shapes()
        .into_iter()
        .map(|(r, c)| DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(&mut rng)))
        .collect();
    let live = ParamSet::from_layers(layers);
    Ok(CenteredNetwork { frozen: live.clone(), live, config })
}

fn check_finite(m: &DMatrix<f64>, stage: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { stage, step: None })
    }
}

/// Runs the uncentered network on `inputs` (`D x B`).
pub(crate) fn forward_params(
    config: &NetworkConfig,
    params: &ParamSet,
    inputs: &DMatrix<f64>,
) -> Result<ForwardPass> {
    if inputs.nrows() != config.input_dim {
        return Err(Error::Argument(format!(
            "inputs have dimension {} but the network expects {}",
            inputs.nrows(),
            config.input_dim
        )));
    }
    check_finite(inputs, "inputs")?;
    let w = params.layers();
    let act = config.activation;
    let skip = config.skip();
    let mut h = &w[0] * inputs * config.layer_scale(0);
    if config.depth == 1 {
        check_finite(&h, "output")?;
        return Ok(ForwardPass { pre: Vec::new(), post: Vec::new(), output: h });
    }
    let mut pre = Vec::with_capacity(config.depth - 1);
    let mut post = Vec::with_capacity(config.depth - 1);
    for (l, weight) in w.iter().enumerate().skip(1) {
        check_finite(&h, "hidden preactivation")?;
        let a = h.map(|x| act.apply(x));
        let mut next = weight * &a * config.layer_scale(l);
        if skip != 0.0 && l + 1 < config.depth {
            next += &h * skip;
        }
        pre.push(h);
        post.push(a);
        h = next;
    }
    check_finite(&h, "output")?;
    Ok(ForwardPass { pre, post, output: h })
}

/// Reverse accumulation: gradient of a scalar whose derivative with respect to
/// the raw output `f` is `cotangent` (`C x B`).
pub(crate) fn reverse(
    config: &NetworkConfig,
    params: &ParamSet,
    inputs: &DMatrix<f64>,
    pass: &ForwardPass,
    cotangent: &DMatrix<f64>,
) -> ParamSet {
    let depth = config.depth;
    let w = params.layers();
    let mut grads = vec![DMatrix::zeros(0, 0); depth];
    if depth == 1 {
        grads[0] = cotangent * inputs.transpose() * config.layer_scale(0);
        return ParamSet::from_layers(grads);
    }
    let act = config.activation;
    let skip = config.skip();
    let top = depth - 1;
    let s_top = config.layer_scale(top);
    grads[top] = cotangent * pass.post[top - 1].transpose() * s_top;
    let upstream = w[top].tr_mul(cotangent) * s_top;
    let mut delta = upstream.zip_map(&pass.pre[top - 1], |g, h| g * act.derivative(h));
    for l in (1..top).rev() {
        let s = config.layer_scale(l);
        grads[l] = &delta * pass.post[l - 1].transpose() * s;
        let upstream = w[l].tr_mul(&delta) * s;
        let mut below = upstream.zip_map(&pass.pre[l - 1], |g, h| g * act.derivative(h));
        if skip != 0.0 {
            below += &delta * skip;
        }
        delta = below;
    }
    grads[0] = &delta * inputs.transpose() * config.layer_scale(0);
    ParamSet::from_layers(grads)
}

impl CenteredNetwork {
    /// Builds a network from explicit weights, e.g. a restored snapshot.
    pub fn from_params(config: NetworkConfig, live: ParamSet, frozen: ParamSet) -> Result<Self> {
        config.validate()?;
        let shapes = config.layer_shapes();
        if live.shapes() != shapes || frozen.shapes() != shapes {
            return Err(Error::Config("weight shapes do not match the configuration".into()));
        }
        if !live.is_finite() || !frozen.is_finite() {
            return Err(Error::Config("weights must be finite".into()));
        }
        Ok(Self { config, live, frozen })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn live(&self) -> &ParamSet {
        &self.live
    }

    pub fn frozen(&self) -> &ParamSet {
        &self.frozen
    }

    pub(crate) fn live_mut(&mut self) -> &mut ParamSet {
        &mut self.live
    }

    pub fn gamma(&self) -> f64 {
        self.config.gamma
    }

    /// Same weights, different richness.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        let config = self.config.clone().with_gamma(gamma);
        config.validate()?;
        Ok(Self { config, ..self.clone() })
    }

    pub fn forward(&self, inputs: &DMatrix<f64>) -> Result<ForwardPass> {
        forward_params(&self.config, &self.live, inputs)
    }

    /// `(f(x; live) - f(x; frozen)) / gamma`, one column per example.
    pub fn centered_forward(&self, inputs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(self.evaluate(inputs)?.centered)
    }

    pub fn evaluate(&self, inputs: &DMatrix<f64>) -> Result<Evaluation> {
        let pass = self.forward(inputs)?;
        let reference = forward_params(&self.config, &self.frozen, inputs)?.output;
        let centered = (&pass.output - reference) / self.config.gamma;
        check_finite(&centered, "centered output")?;
        Ok(Evaluation { pass, centered })
    }

    /// Batch loss and its exact gradient with respect to the live weights.
    pub fn backward(&self, batch: &Batch, loss: LossKind) -> Result<Gradient> {
        let eval = self.evaluate(&batch.inputs)?;
        self.backward_from(batch, loss, &eval)
    }

    pub(crate) fn backward_from(&self, batch: &Batch, loss: LossKind, eval: &Evaluation) -> Result<Gradient> {
        if batch.targets.nrows() != self.config.output_dim {
            return Err(Error::Argument(format!(
                "targets have {} rows but the network has {} outputs",
                batch.targets.nrows(),
                self.config.output_dim
            )));
        }
        let value = loss.value(&eval.centered, &batch.targets);
        let cotangent = loss.output_gradient(&eval.centered, &batch.targets) / self.config.gamma;
        let params = reverse(&self.config, &self.live, &batch.inputs, &eval.pass, &cotangent);
        if !value.is_finite() || !params.is_finite() {
            return Err(Error::NonFinite { stage: "gradient", step: None });
        }
        Ok(Gradient { loss: value, params })
    }
}
