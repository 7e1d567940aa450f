use super::alignment::MatrixNorm;
use crate::error::{Error, Result};
use crate::nn::CenteredNetwork;

/// `||W_l(t) - W_l(0)||` for weight matrix `layer` (0-based, input layer first).
pub fn weight_movement(net: &CenteredNetwork, layer: usize, norm: MatrixNorm) -> Result<f64> {
    let depth = net.config().depth;
    if layer >= depth {
        return Err(Error::Argument(format!("layer must be below {depth}, got {layer}")));
    }
    let delta = net.live().layer(layer) - net.frozen().layer(layer);
    Ok(norm.of(&delta))
}
