//! Elementwise activations and their derivatives.

use serde::{Deserialize, Serialize};

/// Rectified linear unit, `max(0, x)`.
pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Exponential linear unit with unit scale: `x` for `x > 0`, `e^x - 1`
/// otherwise.
pub fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp() - 1.0
    }
}

/// Logistic sigmoid, computed on the branch that keeps the exponential
/// argument non-positive so the result stays finite (and positive) for
/// arguments as extreme as ±500.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Hidden-layer activation choice.
///
/// The derivative of both variants can be recovered from the activation
/// *output* alone (`relu': out > 0`; `elu': out + 1` on the negative
/// branch), which lets backward passes cache only post-activation values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Elu,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => relu(x),
            Activation::Elu => elu(x),
        }
    }

    /// Derivative expressed in terms of the activation output.
    pub fn prime_from_output(self, out: f64) -> f64 {
        match self {
            Activation::Relu => {
                if out > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Elu => {
                if out > 0.0 {
                    1.0
                } else {
                    out + 1.0
                }
            }
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::Relu),
            "elu" => Ok(Activation::Elu),
            other => Err(crate::Error::Invalid(format!(
                "unknown activation `{other}` (expected relu or elu)"
            ))),
        }
    }
}
