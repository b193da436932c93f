//! MAP estimation of the latent function and its Laplace covariance.

mod covariance;
mod fit;
mod objective;
mod posterior;

pub use covariance::{
    data_hessian_diagonal, observed_hessian_diagonal, observed_posterior_variance, posterior_covariance,
    posterior_variance, prior_covariance, PriorCovariance,
};
pub use fit::{event_gram, fit_map, MapFit};
pub use objective::{objective, objective_gradient};
pub use posterior::{posterior_at, Posterior};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observed events `{tᵢ}` inside an axis-aligned domain.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSet {
    events: DMatrix<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl EventSet {
    /// `events` is n×d, one event per row.
    pub fn new(events: DMatrix<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let d = lower.len();
        if d == 0 || upper.len() != d {
            return Err(Error::input("domain bounds must share a non-zero dimension"));
        }
        if let Some(k) = (0..d).find(|&k| !(lower[k].is_finite() && upper[k].is_finite() && lower[k] < upper[k])) {
            return Err(Error::input(format!("domain axis {k}: lower must be below upper")));
        }
        if events.ncols() != d {
            return Err(Error::input(format!(
                "events have {} columns, domain has dimension {d}",
                events.ncols()
            )));
        }
        for i in 0..events.nrows() {
            for k in 0..d {
                let x = events[(i, k)];
                if !(x >= lower[k] && x <= upper[k]) {
                    return Err(Error::input(format!("event {i} coordinate {k} = {x} lies outside the domain")));
                }
            }
        }
        Ok(Self { events, lower, upper })
    }

    pub fn from_points(points: &[Vec<f64>], lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let d = lower.len();
        if let Some(p) = points.iter().find(|p| p.len() != d) {
            return Err(Error::input(format!("event of dimension {} in a {d}-dimensional domain", p.len())));
        }
        let events = DMatrix::from_fn(points.len(), d, |i, k| points[i][k]);
        Self::new(events, lower, upper)
    }

    pub fn empty(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let d = lower.len();
        Self::new(DMatrix::zeros(0, d), lower, upper)
    }

    pub fn len(&self) -> usize {
        self.events.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// n×d matrix of event locations.
    pub fn events(&self) -> &DMatrix<f64> {
        &self.events
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        self.events.row(i).iter().copied().collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Events satisfying `keep`, in their original order.
    pub fn filter(&self, keep: impl Fn(&[f64]) -> bool) -> EventSet {
        let kept: Vec<Vec<f64>> = self.points().into_iter().filter(|p| keep(p)).collect();
        let events = DMatrix::from_fn(kept.len(), self.dim(), |i, k| kept[i][k]);
        EventSet { events, lower: self.lower.clone(), upper: self.upper.clone() }
    }
}

/// Update direction of the dual-coefficient descent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Descent {
    /// Gradient taken in the RKHS metric: `α ← α - δ·2(α - 1/h)`. This is the
    /// Euclidean gradient preconditioned by `K̃⁻¹`, with adaptive step size.
    #[default]
    Functional,
    /// Plain `α ← α - δ ∇_α J` with constant step and backtracking.
    Euclidean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    /// Penalty `γ` on the RKHS norm.
    pub gamma: f64,
    /// Initial step size `δ`.
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Stop once the Euclidean norm of `∇_α J` falls below this.
    pub grad_tolerance: f64,
    /// Floor on `h²` inside the logarithm.
    pub floor: f64,
    /// Random initial coefficients when set; `1/n` for every event otherwise.
    pub seed: Option<u64>,
    pub descent: Descent,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            learning_rate: 1e-3,
            max_iters: 5000,
            grad_tolerance: 1e-6,
            floor: 1e-12,
            seed: None,
            descent: Descent::Functional,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::input(format!("{name} must be positive, got {v}")))
            }
        };
        positive("gamma", self.gamma)?;
        positive("learning_rate", self.learning_rate)?;
        positive("grad_tolerance", self.grad_tolerance)?;
        positive("floor", self.floor)?;
        if self.floor > 1e-4 {
            return Err(Error::input(format!("floor must not exceed 1e-4, got {}", self.floor)));
        }
        if self.max_iters == 0 {
            return Err(Error::input("max_iters must be at least 1"));
        }
        Ok(())
    }
}

/// Representer weights `α` of `ĥ(·) = Σ αᵢ k̃(tᵢ, ·)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCoefficients {
    pub alpha: DVector<f64>,
}
