//! Poisson counts, thinning-based sampling and the benchmark intensities.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::inference::EventSet;

/// Midpoint-rule points per dimension when integrating an intensity.
pub const DEFAULT_QUADRATURE_POINTS: usize = 512;

type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A bounded intensity `λ(t)` over a box, suitable for thinning.
#[derive(Clone)]
pub struct IntensityFunction {
    evaluator: Evaluator,
    upper_bound: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl fmt::Debug for IntensityFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IntensityFunction")
            .field("upper_bound", &self.upper_bound)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .finish_non_exhaustive()
    }
}

impl IntensityFunction {
    pub fn new(
        evaluator: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        upper_bound: f64,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Result<Self> {
        if !(upper_bound.is_finite() && upper_bound > 0.0) {
            return Err(Error::input(format!("upper bound must be positive, got {upper_bound}")));
        }
        if lower.is_empty() || lower.len() != upper.len() || lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(Error::input("intensity domain must be a non-empty box"));
        }
        Ok(Self { evaluator: Arc::new(evaluator), upper_bound, lower, upper })
    }

    /// Constant intensity `value` with bound `value` (or 1 when zero).
    pub fn constant(value: f64, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let bound = if value > 0.0 { value } else { 1.0 };
        Self::new(move |_| value, bound, lower, upper)
    }

    pub fn eval(&self, t: &[f64]) -> f64 {
        (self.evaluator)(t)
    }

    pub fn upper_bound(&self) -> f64 {
        self.upper_bound
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }

    /// Checks `0 ≤ λ ≤ bound` at `samples` uniformly drawn points.
    pub fn spot_check(&self, samples: usize, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = vec![0.0; self.dim()];
        for _ in 0..samples {
            for (k, x) in t.iter_mut().enumerate() {
                *x = rng.random_range(self.lower[k]..self.upper[k]);
            }
            let v = self.eval(&t);
            if v > self.upper_bound {
                return Err(Error::BoundViolation { value: v, bound: self.upper_bound });
            }
            if !(v >= 0.0) {
                return Err(Error::Numeric(format!("intensity {v} at {t:?} is negative or undefined")));
            }
        }
        Ok(())
    }

    /// `∫ λ` over the whole domain by the midpoint rule.
    pub fn integral(&self, points_per_dim: usize) -> Result<f64> {
        integrate(|t| self.eval(t), &self.lower, &self.upper, points_per_dim)
    }
}

/// Midpoint-rule integral of `f` over the box `[a, b]`.
pub fn integrate(f: impl Fn(&[f64]) -> f64, a: &[f64], b: &[f64], points_per_dim: usize) -> Result<f64> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::input("integration bounds must share a non-zero dimension"));
    }
    if a.iter().zip(b).any(|(x, y)| !(x < y)) {
        return Err(Error::input("integration bounds must satisfy a < b"));
    }
    if points_per_dim == 0 {
        return Err(Error::input("quadrature needs at least one point per dimension"));
    }
    let d = a.len();
    let widths: Vec<f64> = (0..d).map(|k| (b[k] - a[k]) / points_per_dim as f64).collect();
    let cell: f64 = widths.iter().product();
    let total_points = points_per_dim.pow(d as u32);
    let mut t = vec![0.0; d];
    let mut sum = 0.0;
    for p in 0..total_points {
        let mut rest = p;
        for k in (0..d).rev() {
            let i = rest % points_per_dim;
            rest /= points_per_dim;
            t[k] = a[k] + (i as f64 + 0.5) * widths[k];
        }
        sum += f(&t);
    }
    let lambda = sum * cell;
    if !lambda.is_finite() {
        return Err(Error::Numeric(format!("integrated intensity is {lambda}")));
    }
    Ok(lambda)
}

/// Poisson probability of `n` arrivals with mean `lambda`, computed in log space.
pub fn poisson_pmf(n: u64, lambda: f64) -> Result<f64> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Numeric(format!("Poisson mean {lambda} is not a finite non-negative number")));
    }
    if lambda == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    let n = n as f64;
    Ok((n * lambda.ln() - lambda - ln_gamma(n + 1.0)).exp())
}

/// `Pr(N ≤ k)` for `N ~ Poisson(lambda)`.
pub fn poisson_cdf(k: u64, lambda: f64) -> Result<f64> {
    let mut total = 0.0;
    for n in 0..=k {
        total += poisson_pmf(n, lambda)?;
    }
    Ok(total.min(1.0))
}

/// Probability of exactly `n` arrivals in `[a, b]` under intensity `f`,
/// whose integral is taken by the midpoint rule.
pub fn count_probability(
    f: impl Fn(&[f64]) -> f64,
    a: &[f64],
    b: &[f64],
    n: u64,
    quadrature_points: usize,
) -> Result<f64> {
    let lambda = integrate(f, a, b, quadrature_points)?;
    poisson_pmf(n, lambda)
}

/// Lewis thinning: a homogeneous Poisson process at the bound, each point
/// kept with probability `λ(t)/bound`. Events are sorted by first coordinate.
pub fn thinning_sample(intensity: &IntensityFunction, rng_seed: u64) -> Result<EventSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let d = intensity.dim();
    let mean = intensity.upper_bound() * intensity.volume();
    let count = Poisson::new(mean)
        .map_err(|e| Error::Numeric(format!("candidate count distribution: {e}")))?
        .sample(&mut rng) as usize;
    let mut kept = Vec::new();
    for _ in 0..count {
        let t: Vec<f64> = (0..d)
            .map(|k| rng.random_range(intensity.lower()[k]..intensity.upper()[k]))
            .collect();
        let v = intensity.eval(&t);
        if v > intensity.upper_bound() {
            return Err(Error::BoundViolation { value: v, bound: intensity.upper_bound() });
        }
        let u: f64 = rng.random();
        if u * intensity.upper_bound() < v {
            kept.push(t);
        }
    }
    kept.sort_by(|a, b| a[0].total_cmp(&b[0]));
    EventSet::from_points(&kept, intensity.lower().to_vec(), intensity.upper().to_vec())
}

/// The three one-dimensional benchmark intensities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SyntheticIntensity {
    /// `2e^{-t/15} + e^{-((t-25)/10)²}` on `[0, 50]`.
    #[serde(rename = "1")]
    Lambda1,
    /// `5 sin(t²) + 6` on `[0, 5]`.
    #[serde(rename = "2")]
    Lambda2,
    /// Piecewise linear through (0,20), (25,3), (50,1), (75,2.5), (100,3).
    #[serde(rename = "3")]
    Lambda3,
}

const LAMBDA3_KNOTS: [(f64, f64); 5] = [(0.0, 20.0), (25.0, 3.0), (50.0, 1.0), (75.0, 2.5), (100.0, 3.0)];

impl SyntheticIntensity {
    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            1 => Ok(Self::Lambda1),
            2 => Ok(Self::Lambda2),
            3 => Ok(Self::Lambda3),
            _ => Err(Error::input(format!("unknown synthetic intensity {id}, expected 1, 2 or 3"))),
        }
    }

    pub fn domain(self) -> (f64, f64) {
        match self {
            Self::Lambda1 => (0.0, 50.0),
            Self::Lambda2 => (0.0, 5.0),
            Self::Lambda3 => (0.0, 100.0),
        }
    }

    pub fn upper_bound(self) -> f64 {
        match self {
            Self::Lambda1 => 2.05,
            Self::Lambda2 => 11.0,
            Self::Lambda3 => 20.0,
        }
    }

    fn eval_unchecked(self, t: f64) -> f64 {
        match self {
            Self::Lambda1 => 2.0 * (-t / 15.0).exp() + (-((t - 25.0) / 10.0).powi(2)).exp(),
            Self::Lambda2 => 5.0 * (t * t).sin() + 6.0,
            Self::Lambda3 => {
                let i = LAMBDA3_KNOTS.windows(2).position(|w| t <= w[1].0).unwrap_or(3);
                let ((x0, y0), (x1, y1)) = (LAMBDA3_KNOTS[i], LAMBDA3_KNOTS[i + 1]);
                y0 + (y1 - y0) * (t - x0) / (x1 - x0)
            }
        }
    }

    pub fn eval(self, t: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        if !(t >= lo && t <= hi) {
            return Err(Error::input(format!("t = {t} outside [{lo}, {hi}]")));
        }
        Ok(self.eval_unchecked(t))
    }

    /// As a thinning-ready intensity over its own domain.
    pub fn intensity(self) -> IntensityFunction {
        let (lo, hi) = self.domain();
        IntensityFunction::new(move |t| self.eval_unchecked(t[0]), self.upper_bound(), vec![lo], vec![hi])
            .expect("benchmark intensities have valid domains")
    }
}

/// `synthetic_intensity(id, t)` for `id ∈ {1, 2, 3}`.
pub fn synthetic_intensity(id: u8, t: f64) -> Result<f64> {
    SyntheticIntensity::from_id(id)?.eval(t)
}
