use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::matrix::Matrix;

/// Elementwise non-linearity used by encoder or decoder layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    #[default]
    Tanh,
    Sigmoid,
    /// Non-saturating sigmoid `y / (1 + |y|)`.
    Nssigmoid,
    Softplus,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 4] = [
        ActivationKind::Tanh,
        ActivationKind::Sigmoid,
        ActivationKind::Nssigmoid,
        ActivationKind::Softplus,
    ];

    #[inline]
    pub fn value(self, y: f64) -> f64 {
        match self {
            ActivationKind::Tanh => y.tanh(),
            ActivationKind::Sigmoid => sigmoid(y),
            ActivationKind::Nssigmoid => y / (1.0 + y.abs()),
            ActivationKind::Softplus => softplus(y),
        }
    }

    /// Derivative with respect to the pre-activation `y`.
    #[inline]
    pub fn derivative(self, y: f64) -> f64 {
        match self {
            ActivationKind::Tanh => {
                let t = y.tanh();
                1.0 - t * t
            }
            ActivationKind::Sigmoid => {
                let s = sigmoid(y);
                s * (1.0 - s)
            }
            ActivationKind::Nssigmoid => {
                let d = 1.0 + y.abs();
                1.0 / (d * d)
            }
            ActivationKind::Softplus => sigmoid(y),
        }
    }

    pub fn apply(self, y: &Matrix) -> Matrix {
        y.map(|v| self.value(v))
    }

    pub fn derivative_matrix(self, y: &Matrix) -> Matrix {
        y.map(|v| self.derivative(v))
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Tanh => "tanh",
            ActivationKind::Sigmoid => "sigmoid",
            ActivationKind::Nssigmoid => "nssigmoid",
            ActivationKind::Softplus => "softplus",
        }
    }
}

#[inline]
fn sigmoid(y: f64) -> f64 {
    if y >= 0.0 {
        1.0 / (1.0 + (-y).exp())
    } else {
        let e = y.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn softplus(y: f64) -> f64 {
    if y > 0.0 {
        y + (-y).exp().ln_1p()
    } else {
        y.exp().ln_1p()
    }
}

/// Elementwise activation value.
pub fn apply(kind: ActivationKind, y: &Matrix) -> Matrix {
    kind.apply(y)
}

/// Elementwise derivative at the pre-activation values.
pub fn derivative(kind: ActivationKind, y: &Matrix) -> Matrix {
    kind.derivative_matrix(y)
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tanh" => Ok(ActivationKind::Tanh),
            "sigmoid" => Ok(ActivationKind::Sigmoid),
            "nssigmoid" => Ok(ActivationKind::Nssigmoid),
            "softplus" => Ok(ActivationKind::Softplus),
            other => Err(Error::InvalidConfig(format!(
                "unknown activation '{other}' (expected tanh, sigmoid, nssigmoid or softplus)"
            ))),
        }
    }
}
