//! Sequential region sampling: fit on what has been revealed, score the
//! candidate regions, reveal the best one, repeat.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::acquisition::{AcquisitionSpec, RegionScorer};
use crate::error::{Error, Result};
use crate::inference::{fit_map, prior_covariance, EventSet, FitConfig, Posterior, PriorCovariance};
use crate::kernels::{Grid, KernelSpec, TransformedKernelModel, GRAM_JITTER};
use crate::link::LinkFunction;

/// Intensity assumed before any event has been revealed.
pub const COLD_START_INTENSITY: f64 = 1e-3;

/// Axis-aligned box `[center - radius, center + radius]`, boundaries included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    center: Vec<f64>,
    radius: f64,
}

impl Region {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::input("region center must be a non-empty finite vector"));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::input(format!("region radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn lower(&self) -> Vec<f64> {
        self.center.iter().map(|c| c - self.radius).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.center.iter().map(|c| c + self.radius).collect()
    }

    pub fn contains(&self, t: &[f64]) -> bool {
        t.len() == self.dim() && t.iter().zip(&self.center).all(|(x, c)| (x - c).abs() <= self.radius)
    }

    /// Intersection with the box `[lower, upper]`, or `None` when they are disjoint.
    pub fn clip(&self, lower: &[f64], upper: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        if lower.len() != self.dim() || upper.len() != self.dim() {
            return None;
        }
        let lo: Vec<f64> = self.lower().iter().zip(lower).map(|(a, b)| a.max(*b)).collect();
        let hi: Vec<f64> = self.upper().iter().zip(upper).map(|(a, b)| a.min(*b)).collect();
        lo.iter().zip(&hi).all(|(a, b)| a <= b).then_some((lo, hi))
    }
}

#[derive(Debug, Clone)]
pub struct BOConfig {
    /// Number of regions to select.
    pub budget: usize,
    pub initial_regions: Vec<Region>,
    /// Candidate centers. When empty they are laid out on a stride of
    /// `radius` across the domain.
    pub candidate_centers: Vec<Vec<f64>>,
    /// Half-width of every candidate region.
    pub radius: f64,
    pub acquisition: AcquisitionSpec,
    pub fit: FitConfig,
    pub kernel: KernelSpec,
    pub link: LinkFunction,
    /// Grid resolution over the dataset's domain.
    pub points_per_dim: Vec<usize>,
}

impl BOConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::input("budget must be at least 1"));
        }
        if self.initial_regions.is_empty() {
            return Err(Error::input("at least one initial region is required"));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::input(format!("radius must be positive, got {}", self.radius)));
        }
        if self.initial_regions.iter().any(|r| r.dim() != dim) {
            return Err(Error::input("initial region dimension does not match the data"));
        }
        if self.candidate_centers.iter().any(|c| c.len() != dim) {
            return Err(Error::input("candidate center dimension does not match the data"));
        }
        if self.kernel.dim() != dim || self.points_per_dim.len() != dim {
            return Err(Error::input("kernel and grid must match the data dimension"));
        }
        self.acquisition.validate()?;
        self.fit.validate()
    }
}

/// One iteration of the loop.
#[derive(Debug, Clone, Serialize)]
pub struct StepRecord {
    pub step: usize,
    /// Index into the candidate list.
    pub selected: usize,
    pub region: Region,
    /// Events revealed by this step only, in dataset order.
    pub new_events: Vec<Vec<f64>>,
    pub total_revealed: usize,
    /// Posterior the selection was based on.
    pub mean_g: Vec<f64>,
    pub std: Vec<f64>,
    pub intensity: Vec<f64>,
    /// One score per candidate; explored candidates score `-∞`.
    pub scores: Vec<f64>,
    pub duration_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct BOTrace {
    pub candidates: Vec<Region>,
    pub steps: Vec<StepRecord>,
    /// Everything revealed by the initial and selected regions.
    pub revealed: EventSet,
    /// Posterior after the last reveal.
    pub final_posterior: Posterior,
}

/// Events inside the union of `regions`, in dataset order.
pub fn reveal(dataset: &EventSet, regions: &[Region]) -> EventSet {
    dataset.filter(|p| regions.iter().any(|r| r.contains(p)))
}

/// Centers from `lower` to `upper` in steps of `stride` along every axis,
/// last axis fastest.
pub fn stride_centers(lower: &[f64], upper: &[f64], stride: f64) -> Result<Vec<Vec<f64>>> {
    if !(stride.is_finite() && stride > 0.0) {
        return Err(Error::input(format!("stride must be positive, got {stride}")));
    }
    let axes: Vec<Vec<f64>> = lower
        .iter()
        .zip(upper)
        .map(|(&lo, &hi)| {
            let slack = 1e-9 * (hi - lo).abs();
            let count = ((hi - lo + slack) / stride).floor() as usize + 1;
            (0..count).map(|k| lo + k as f64 * stride).collect()
        })
        .collect();
    let mut out = vec![Vec::new()];
    for axis in &axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&x| {
                    let mut c = prefix.clone();
                    c.push(x);
                    c
                })
            })
            .collect();
    }
    Ok(out)
}

/// Fits the posterior on `events`, or returns the prior when there are none.
/// Only the `watched` cells contribute the integral term to the covariance.
fn posterior_for(
    events: &EventSet,
    model: &TransformedKernelModel,
    prior: &PriorCovariance,
    cfg: &BOConfig,
    watched: &[bool],
) -> Result<Posterior> {
    if events.is_empty() {
        let base = cfg.link.clamp_to_range(COLD_START_INTENSITY, cfg.fit.floor);
        return Posterior::from_prior(model.grid(), cfg.link, prior, base, false);
    }
    let fit = fit_map(events, model, cfg.link, &cfg.fit)?;
    Posterior::from_fit_observed(&fit, events, model.grid(), cfg.link, prior, watched)
}

/// Runs the loop for `cfg.budget` steps, or until every candidate has been
/// explored. The kernel eigensystem and prior are built once per run.
pub fn run_bo(dataset: &EventSet, cfg: &BOConfig) -> Result<BOTrace> {
    let dim = dataset.dim();
    cfg.validate(dim)?;
    let grid = Grid::new(dataset.lower().to_vec(), dataset.upper().to_vec(), cfg.points_per_dim.clone())?;
    let model = TransformedKernelModel::new(cfg.kernel.clone(), grid.clone(), cfg.fit.gamma)?;
    let prior = prior_covariance(&grid, &cfg.kernel, GRAM_JITTER * cfg.kernel.variance())?;

    let centers = if cfg.candidate_centers.is_empty() {
        stride_centers(dataset.lower(), dataset.upper(), cfg.radius)?
    } else {
        cfg.candidate_centers.clone()
    };
    let candidates = centers
        .into_iter()
        .map(|c| Region::new(c, cfg.radius))
        .collect::<Result<Vec<_>>>()?;
    if candidates.is_empty() {
        return Err(Error::input("no candidate regions"));
    }

    let grid_points: Vec<Vec<f64>> = (0..grid.len()).map(|j| grid.point(j)).collect();
    let mut explored = vec![false; grid.len()];
    let mark = |explored: &mut Vec<bool>, region: &Region| {
        for (j, p) in grid_points.iter().enumerate() {
            if region.contains(p) {
                explored[j] = true;
            }
        }
    };
    let points = dataset.points();
    let mut is_revealed: Vec<bool> = points.iter().map(|p| cfg.initial_regions.iter().any(|r| r.contains(p))).collect();
    for r in &cfg.initial_regions {
        mark(&mut explored, r);
    }
    let mut selected = vec![false; candidates.len()];
    let mut steps = Vec::with_capacity(cfg.budget);

    for step in 0..cfg.budget {
        let started = Instant::now();
        let kept: Vec<Vec<f64>> = points.iter().zip(&is_revealed).filter(|(_, &r)| r).map(|(p, _)| p.clone()).collect();
        let observed = EventSet::from_points(&kept, dataset.lower().to_vec(), dataset.upper().to_vec())?;
        let posterior = posterior_for(&observed, &model, &prior, cfg, &explored)?;
        let scorer = RegionScorer::new(&posterior, &cfg.acquisition, &explored, &observed)?;
        let mut scores = Vec::with_capacity(candidates.len());
        for (c, region) in candidates.iter().enumerate() {
            scores.push(if selected[c] { f64::NEG_INFINITY } else { scorer.score(region)? });
        }
        let best = (0..scores.len())
            .filter(|&c| scores[c] > f64::NEG_INFINITY)
            .fold(None, |best: Option<usize>, c| match best {
                Some(b) if scores[b] >= scores[c] => Some(b),
                _ => Some(c),
            });
        let Some(best) = best else {
            break;
        };
        selected[best] = true;
        let region = candidates[best].clone();
        mark(&mut explored, &region);
        let mut new_events = Vec::new();
        for (i, p) in points.iter().enumerate() {
            if !is_revealed[i] && region.contains(p) {
                is_revealed[i] = true;
                new_events.push(p.clone());
            }
        }
        steps.push(StepRecord {
            step,
            selected: best,
            region,
            new_events,
            total_revealed: is_revealed.iter().filter(|&&r| r).count(),
            mean_g: posterior.mean_g().iter().copied().collect(),
            std: posterior.std().iter().copied().collect(),
            intensity: posterior.intensity().iter().copied().collect(),
            scores,
            duration_seconds: started.elapsed().as_secs_f64(),
        });
    }

    let mut regions = cfg.initial_regions.clone();
    regions.extend(steps.iter().map(|s| s.region.clone()));
    let revealed = reveal(dataset, &regions);
    let final_posterior = posterior_for(&revealed, &model, &prior, cfg, &explored)?;
    Ok(BOTrace { candidates, steps, revealed, final_posterior })
}
