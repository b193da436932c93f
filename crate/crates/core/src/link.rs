//! Smooth non-negative link functions `λ = κ(g)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkFunction {
    Exponential,
    Quadratic,
    Sigmoidal,
    Softplus,
}

impl LinkFunction {
    pub const ALL: [LinkFunction; 4] = [
        LinkFunction::Exponential,
        LinkFunction::Quadratic,
        LinkFunction::Sigmoidal,
        LinkFunction::Softplus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LinkFunction::Exponential => "exponential",
            LinkFunction::Quadratic => "quadratic",
            LinkFunction::Sigmoidal => "sigmoidal",
            LinkFunction::Softplus => "softplus",
        }
    }

    /// Upper end of the link's range (exclusive), `1` for the logistic.
    pub fn range_upper(self) -> f64 {
        match self {
            LinkFunction::Sigmoidal => 1.0,
            _ => f64::INFINITY,
        }
    }

    /// Clamp `y` into the open range of the link so that `kappa_inv` is defined.
    pub fn clamp_to_range(self, y: f64, floor: f64) -> f64 {
        let y = y.max(floor);
        match self {
            LinkFunction::Sigmoidal => y.min(1.0 - 1e-9),
            _ => y,
        }
    }

    pub fn kappa(self, x: f64) -> f64 {
        match self {
            LinkFunction::Exponential => x.exp(),
            LinkFunction::Quadratic => x * x,
            LinkFunction::Sigmoidal => logistic(x),
            LinkFunction::Softplus => softplus(x),
        }
    }

    pub fn kappa_dot(self, x: f64) -> f64 {
        match self {
            LinkFunction::Exponential => x.exp(),
            LinkFunction::Quadratic => 2.0 * x,
            LinkFunction::Sigmoidal => {
                let s = logistic(x);
                s * (1.0 - s)
            }
            LinkFunction::Softplus => logistic(x),
        }
    }

    pub fn kappa_ddot(self, x: f64) -> f64 {
        match self {
            LinkFunction::Exponential => x.exp(),
            LinkFunction::Quadratic => 2.0,
            LinkFunction::Sigmoidal => {
                let s = logistic(x);
                s * (1.0 - s) * (1.0 - 2.0 * s)
            }
            LinkFunction::Softplus => {
                let s = logistic(x);
                s * (1.0 - s)
            }
        }
    }

    /// Inverse link. Quadratic returns the non-negative root.
    pub fn kappa_inv(self, y: f64) -> Result<f64> {
        let in_range = y.is_finite() && y > 0.0 && y < self.range_upper();
        if !in_range {
            return Err(Error::Domain { what: self.name(), value: y });
        }
        Ok(match self {
            LinkFunction::Exponential => y.ln(),
            LinkFunction::Quadratic => y.sqrt(),
            LinkFunction::Sigmoidal => (y / (1.0 - y)).ln(),
            // log(e^y - 1) = y + log(1 - e^{-y})
            LinkFunction::Softplus => y + (-(-y).exp_m1()).ln(),
        })
    }
}

impl fmt::Display for LinkFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LinkFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LinkFunction::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::input(format!("unknown link function {s:?}")))
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}
