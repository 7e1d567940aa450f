use serde::{Deserialize, Serialize};

/// Probability of the negative class in the toy binary cross-entropy target.
pub const XENT_P0: f64 = 1.0 / (1.0 + std::f64::consts::E);
pub const XENT_P1: f64 = 1.0 - XENT_P0;

/// `log(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Scalar losses of the centered output `f`, both minimized at `f = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToyLoss {
    Mse,
    Xent,
}

impl ToyLoss {
    pub fn value(self, f: f64) -> f64 {
        match self {
            ToyLoss::Mse => 0.5 * (f - 1.0) * (f - 1.0),
            ToyLoss::Xent => XENT_P0 * softplus(f) + XENT_P1 * softplus(-f),
        }
    }

    pub fn derivative(self, f: f64) -> f64 {
        match self {
            ToyLoss::Mse => f - 1.0,
            ToyLoss::Xent => sigmoid(f) - XENT_P1,
        }
    }

    pub fn second_derivative(self, f: f64) -> f64 {
        match self {
            ToyLoss::Mse => 1.0,
            ToyLoss::Xent => {
                let s = sigmoid(f);
                s * (1.0 - s)
            }
        }
    }

    /// Minimum value (the target entropy for cross-entropy).
    pub fn floor(self) -> f64 {
        match self {
            ToyLoss::Mse => 0.0,
            ToyLoss::Xent => -XENT_P0 * XENT_P0.ln() - XENT_P1 * XENT_P1.ln(),
        }
    }

    /// Loss above its floor.
    pub fn excess(self, f: f64) -> f64 {
        (self.value(f) - self.floor()).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_at_init() {
        assert_eq!(ToyLoss::Mse.value(0.0), 0.5);
    }

    #[test]
    fn xent_is_minimized_at_one() {
        assert!(ToyLoss::Xent.derivative(1.0).abs() < 1e-15);
        let h = 1e-5;
        let fd = (ToyLoss::Xent.value(1.0 + h) - ToyLoss::Xent.value(1.0 - h)) / (2.0 * h);
        assert!(fd.abs() < 1e-10);
        assert!(ToyLoss::Xent.value(0.9) > ToyLoss::Xent.value(1.0));
        assert!(ToyLoss::Xent.value(1.1) > ToyLoss::Xent.value(1.0));
        assert!((ToyLoss::Xent.value(1.0) - ToyLoss::Xent.floor()).abs() < 1e-15);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for loss in [ToyLoss::Mse, ToyLoss::Xent] {
            for f in [-3.0, -0.2, 0.0, 0.7, 5.0] {
                let h = 1e-5;
                let d = (loss.value(f + h) - loss.value(f - h)) / (2.0 * h);
                let d2 = (loss.derivative(f + h) - loss.derivative(f - h)) / (2.0 * h);
                assert!((d - loss.derivative(f)).abs() < 1e-8, "{loss:?} {f}");
                assert!((d2 - loss.second_derivative(f)).abs() < 1e-8, "{loss:?} {f}");
            }
        }
    }

    #[test]
    fn xent_survives_large_outputs() {
        for f in [-1e3, 1e3, -1e300, 1e300] {
            assert!(ToyLoss::Xent.value(f).is_finite());
            assert!(ToyLoss::Xent.derivative(f).is_finite());
        }
        assert!((ToyLoss::Xent.value(1e3) - XENT_P0 * 1e3).abs() < 1e-9);
    }
}
