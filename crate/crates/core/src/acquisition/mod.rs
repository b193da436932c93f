//! Region scores for choosing where to observe next.
//!
//! * UCB: best `ĝ + ω σ` over the region's grid points.
//! * Idle: `Pr(N ≤ ε)` for the arrivals in the region.
//! * Cumulative: `Pr(N ≥ ξ)`.
//! * Change point: largest change-point probability among the region's bins.
//!
//! Idle and cumulative scores integrate `κ(ĝ + ωσ)` over the region. The
//! change-point score runs a run-length recursion over bins along the first
//! axis, using observed counts where the domain has been explored and
//! posterior expected counts elsewhere.

mod cpd;

pub use cpd::{changepoint_probabilities, cpd_step, run_length_rates, RunLengthPosterior};

use serde::{Deserialize, Serialize};

use crate::bo::Region;
use crate::error::{Error, Result};
use crate::inference::{posterior_at, EventSet, Posterior};
use crate::pointprocess::{integrate, poisson_cdf};

/// Default quadrature points per dimension for region integrals.
pub const DEFAULT_REGION_QUADRATURE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AcquisitionKind {
    Ucb,
    Idle,
    Cumulative,
    Cpd,
}

impl std::str::FromStr for AcquisitionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ucb" => Ok(Self::Ucb),
            "idle" => Ok(Self::Idle),
            "cumulative" => Ok(Self::Cumulative),
            "cpd" => Ok(Self::Cpd),
            _ => Err(Error::input(format!("unknown acquisition {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcquisitionSpec {
    pub kind: AcquisitionKind,
    /// Weight on the posterior standard deviation.
    pub omega: f64,
    /// Idle threshold: score is `Pr(N ≤ epsilon)`.
    pub epsilon: u64,
    /// Cumulative threshold: score is `Pr(N ≥ xi)`.
    pub xi: u64,
    /// Constant change-point hazard.
    pub hazard_rate: f64,
    pub quadrature_points: usize,
}

impl Default for AcquisitionSpec {
    fn default() -> Self {
        Self {
            kind: AcquisitionKind::Ucb,
            omega: 0.8,
            epsilon: 0,
            xi: 5,
            hazard_rate: 0.1,
            quadrature_points: DEFAULT_REGION_QUADRATURE,
        }
    }
}

impl AcquisitionSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.omega.is_finite() {
            return Err(Error::input("omega must be finite"));
        }
        if !(self.hazard_rate > 0.0 && self.hazard_rate <= 1.0) {
            return Err(Error::input(format!("hazard rate must lie in (0, 1], got {}", self.hazard_rate)));
        }
        if self.quadrature_points == 0 {
            return Err(Error::input("quadrature_points must be positive"));
        }
        Ok(())
    }
}

/// `max ĝ + ω₁σ` over the grid points inside the region.
pub fn acq_ucb(posterior: &Posterior, region: &Region, omega1: f64) -> Result<f64> {
    ucb_masked(posterior, region, omega1, None)
}

/// `Pr(N ≤ ε)` with `N ~ Poisson(∫_region κ(ĝ + ω₂σ))`.
pub fn acq_idle(posterior: &Posterior, region: &Region, omega2: f64, epsilon: u64) -> Result<f64> {
    let lambda = region_mass(posterior, region, omega2, DEFAULT_REGION_QUADRATURE)?;
    poisson_cdf(epsilon, lambda)
}

/// `Pr(N ≥ ξ)` with `N ~ Poisson(∫_region κ(ĝ + ω₃σ))`.
pub fn acq_cumulative(posterior: &Posterior, region: &Region, omega3: f64, xi: u64) -> Result<f64> {
    if xi == 0 {
        return Ok(1.0);
    }
    let lambda = region_mass(posterior, region, omega3, DEFAULT_REGION_QUADRATURE)?;
    Ok((1.0 - poisson_cdf(xi - 1, lambda)?).max(0.0))
}

/// Largest change-point probability over the region's bins, with counts
/// taken from `observed` events in explored cells and from the posterior
/// elsewhere. `explored` flags grid cells; `None` means nothing explored.
pub fn acq_changepoint(
    posterior: &Posterior,
    region: &Region,
    observed: &EventSet,
    explored: Option<&[bool]>,
    hazard: f64,
) -> Result<f64> {
    let profile = changepoint_profile(posterior, observed, explored, hazard)?;
    profile_score(posterior, region, &profile, None)
}

/// Expected arrivals `∫ κ(ĝ + ωσ)` over the part of the region inside the domain.
pub fn region_mass(posterior: &Posterior, region: &Region, omega: f64, quadrature_points: usize) -> Result<f64> {
    let grid = posterior.grid();
    let (lo, hi) = region
        .clip(grid.lower(), grid.upper())
        .ok_or_else(|| Error::input("region lies outside the domain"))?;
    if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
        return Ok(0.0);
    }
    let link = posterior.link();
    let failure = std::cell::RefCell::new(None);
    let lambda = integrate(
        |t| match (posterior.interpolate(posterior.mean_g(), t), posterior.interpolate(posterior.std(), t)) {
            (Ok(m), Ok(s)) => link.kappa(m + omega * s),
            (Err(e), _) | (_, Err(e)) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        &lo,
        &hi,
        quadrature_points,
    )?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(lambda),
    }
}

/// Pr(r = 0) after each bin along the first grid axis.
pub fn changepoint_profile(
    posterior: &Posterior,
    observed: &EventSet,
    explored: Option<&[bool]>,
    hazard: f64,
) -> Result<Vec<f64>> {
    let grid = posterior.grid();
    let m = grid.len();
    if let Some(mask) = explored {
        if mask.len() != m {
            return Err(Error::input(format!("explored mask has {} entries, grid has {m}", mask.len())));
        }
    }
    let is_explored = |j: usize| explored.is_some_and(|mask| mask[j]);
    let mut cell_counts = vec![0.0; m];
    for p in observed.points() {
        if let Some(j) = grid.cell_of(&p) {
            cell_counts[j] += 1.0;
        }
    }
    let bins = grid.points_per_dim()[0];
    let per_bin = m / bins;
    let dt = grid.cell_volume();
    let mut counts = vec![0.0; bins];
    let mut inflation = vec![0.0; bins];
    for (j, &observed) in cell_counts.iter().enumerate() {
        let b = j / per_bin;
        counts[b] += if is_explored(j) { observed } else { posterior.intensity()[j] * dt };
        inflation[b] += posterior.std()[j] / per_bin as f64;
    }
    let inflation: Vec<f64> = inflation.into_iter().map(|s| 1.0 + s).collect();
    changepoint_probabilities(&counts, &inflation, hazard)
}

fn profile_score(posterior: &Posterior, region: &Region, profile: &[f64], explored: Option<&[bool]>) -> Result<f64> {
    let grid = posterior.grid();
    let (lo, hi) = region
        .clip(grid.lower(), grid.upper())
        .ok_or_else(|| Error::input("region lies outside the domain"))?;
    let coords = grid.axis_coords(0);
    let per_bin = grid.len() / coords.len();
    let open_bin = |b: usize| explored.is_none_or(|mask| (b * per_bin..(b + 1) * per_bin).any(|j| !mask[j]));
    let mut best = f64::NEG_INFINITY;
    for (b, &x) in coords.iter().enumerate() {
        if x >= lo[0] && x <= hi[0] && open_bin(b) {
            best = best.max(profile[b]);
        }
    }
    if best == f64::NEG_INFINITY && explored.is_none() {
        // Region narrower than a cell: use the bin holding its center.
        let c = region.center()[0].clamp(grid.lower()[0], grid.upper()[0]);
        let probe: Vec<f64> = (0..grid.dim()).map(|k| if k == 0 { c } else { grid.lower()[k] }).collect();
        if let Some(j) = grid.cell_of(&probe) {
            best = profile[j / per_bin];
        }
    }
    Ok(best)
}

fn ucb_masked(posterior: &Posterior, region: &Region, omega: f64, explored: Option<&[bool]>) -> Result<f64> {
    let grid = posterior.grid();
    if region.clip(grid.lower(), grid.upper()).is_none() {
        return Err(Error::input("region lies outside the domain"));
    }
    let mean = posterior.mean_g();
    let std = posterior.std();
    let mut best = f64::NEG_INFINITY;
    let mut inside = false;
    for j in 0..grid.len() {
        if !region.contains(&grid.point(j)) {
            continue;
        }
        inside = true;
        if explored.is_some_and(|mask| mask[j]) {
            continue;
        }
        best = best.max(mean[j] + omega * std[j]);
    }
    if !inside {
        let center: Vec<f64> = region
            .center()
            .iter()
            .enumerate()
            .map(|(k, c)| c.clamp(grid.lower()[k], grid.upper()[k]))
            .collect();
        let open = match grid.cell_of(&center) {
            Some(j) => !explored.is_some_and(|mask| mask[j]),
            None => false,
        };
        if open {
            let q = nalgebra::DMatrix::from_row_slice(1, center.len(), &center);
            let (m, s) = posterior_at(posterior, &q)?;
            best = m[0] + omega * s[0];
        }
    }
    Ok(best)
}

/// Scores candidate regions against one posterior, skipping explored cells.
///
/// A region whose grid cells are all explored scores `-∞`. UCB and
/// change-point scores only consider unexplored cells; idle and cumulative
/// integrate over the whole region.
pub struct RegionScorer<'a> {
    posterior: &'a Posterior,
    spec: &'a AcquisitionSpec,
    explored: &'a [bool],
    profile: Option<Vec<f64>>,
}

impl<'a> RegionScorer<'a> {
    pub fn new(
        posterior: &'a Posterior,
        spec: &'a AcquisitionSpec,
        explored: &'a [bool],
        observed: &EventSet,
    ) -> Result<Self> {
        spec.validate()?;
        if explored.len() != posterior.grid().len() {
            return Err(Error::input("explored mask does not match the grid"));
        }
        let profile = match spec.kind {
            AcquisitionKind::Cpd => Some(changepoint_profile(posterior, observed, Some(explored), spec.hazard_rate)?),
            _ => None,
        };
        Ok(Self { posterior, spec, explored, profile })
    }

    pub fn score(&self, region: &Region) -> Result<f64> {
        let grid = self.posterior.grid();
        let cells: Vec<usize> = (0..grid.len()).filter(|&j| region.contains(&grid.point(j))).collect();
        if !cells.is_empty() && cells.iter().all(|&j| self.explored[j]) {
            return Ok(f64::NEG_INFINITY);
        }
        let s = self.spec;
        match s.kind {
            AcquisitionKind::Ucb => ucb_masked(self.posterior, region, s.omega, Some(self.explored)),
            AcquisitionKind::Idle => {
                let lambda = region_mass(self.posterior, region, s.omega, s.quadrature_points)?;
                poisson_cdf(s.epsilon, lambda)
            }
            AcquisitionKind::Cumulative => {
                if s.xi == 0 {
                    return Ok(1.0);
                }
                let lambda = region_mass(self.posterior, region, s.omega, s.quadrature_points)?;
                Ok((1.0 - poisson_cdf(s.xi - 1, lambda)?).max(0.0))
            }
            AcquisitionKind::Cpd => {
                let profile = self.profile.as_deref().expect("profile computed for cpd");
                profile_score(self.posterior, region, profile, Some(self.explored))
            }
        }
    }
}
