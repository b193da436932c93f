//! Experiment configuration: one flat TOML table.
//!
//! ```toml
//! synthetic = 1            # or: data = "events.csv"
//! link = "quadratic"
//! gamma = 1.0
//! grid_points = [100]
//! acquisition = "ucb"
//! budget = 25
//! ```
//!
//! Every key is optional. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use coxbo::acquisition::{AcquisitionKind, AcquisitionSpec, DEFAULT_REGION_QUADRATURE};
use coxbo::inference::Descent;
use coxbo::kernels::DEFAULT_LENGTHSCALE_FRACTION;
use coxbo::pointprocess::SyntheticIntensity;
use coxbo::{FitConfig, KernelSpec, LinkFunction};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Default half-width of BO regions as a fraction of the mean domain extent.
pub const DEFAULT_RADIUS_FRACTION: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Events CSV, resolved relative to the config file.
    pub data: Option<PathBuf>,
    /// Benchmark intensity id (1, 2 or 3) used as data source and ground truth.
    pub synthetic: Option<u8>,
    /// Domain bounds; taken from the data (padded by 1%) when absent.
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    /// Grid points per dimension; 100 in 1D and 50 per axis otherwise.
    pub grid_points: Option<Vec<usize>>,

    pub variance: f64,
    /// Defaults to 5% of each axis' extent.
    pub lengthscales: Option<Vec<f64>>,
    pub link: LinkFunction,

    pub gamma: f64,
    pub learning_rate: f64,
    pub max_iters: usize,
    pub grad_tolerance: f64,
    pub floor: f64,
    pub descent: Descent,

    pub acquisition: AcquisitionKind,
    pub omega: f64,
    pub epsilon: u64,
    pub xi: u64,
    pub hazard_rate: f64,
    pub quadrature_points: usize,

    pub budget: usize,
    /// Region half-width; 2% of the mean domain extent when absent.
    pub radius: Option<f64>,
    /// Initial region centers; the domain center when empty.
    pub initial_centers: Vec<Vec<f64>>,
    /// Candidate centers; a stride of `radius` when empty.
    pub candidate_centers: Vec<Vec<f64>>,

    pub seed: u64,
    pub replicates: usize,
    /// Result JSON read by the `metrics` subcommand.
    pub result: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let fit = FitConfig::default();
        let acq = AcquisitionSpec::default();
        Self {
            data: None,
            synthetic: None,
            lower: None,
            upper: None,
            grid_points: None,
            variance: 1.0,
            lengthscales: None,
            link: LinkFunction::Quadratic,
            gamma: fit.gamma,
            learning_rate: fit.learning_rate,
            max_iters: fit.max_iters,
            grad_tolerance: fit.grad_tolerance,
            floor: fit.floor,
            descent: fit.descent,
            acquisition: acq.kind,
            omega: acq.omega,
            epsilon: acq.epsilon,
            xi: acq.xi,
            hazard_rate: acq.hazard_rate,
            quadrature_points: DEFAULT_REGION_QUADRATURE,
            budget: 25,
            radius: None,
            initial_centers: Vec::new(),
            candidate_centers: Vec::new(),
            seed: 0,
            replicates: 1,
            result: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads the file and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.data, &mut cfg.result].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(id) = self.synthetic {
            SyntheticIntensity::from_id(id)?;
        }
        if self.data.is_some() && self.synthetic.is_some() {
            return Err(CliError::Config("set either data or synthetic, not both".into()));
        }
        if self.replicates == 0 {
            return Err(CliError::Config("replicates must be at least 1".into()));
        }
        if self.budget == 0 {
            return Err(CliError::Config("budget must be at least 1".into()));
        }
        match (&self.lower, &self.upper) {
            (Some(lo), Some(hi)) if lo.len() != hi.len() => {
                return Err(CliError::Config("lower and upper differ in length".into()))
            }
            (Some(_), None) | (None, Some(_)) => {
                return Err(CliError::Config("lower and upper must be given together".into()))
            }
            _ => {}
        }
        if let Some(g) = &self.grid_points {
            if g.is_empty() || g.contains(&0) {
                return Err(CliError::Config("grid_points must be positive".into()));
            }
        }
        if let Some(r) = self.radius {
            if !(r.is_finite() && r > 0.0) {
                return Err(CliError::Config(format!("radius must be positive, got {r}")));
            }
        }
        self.fit_config().validate()?;
        self.acquisition_spec().validate()?;
        Ok(())
    }

    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            gamma: self.gamma,
            learning_rate: self.learning_rate,
            max_iters: self.max_iters,
            grad_tolerance: self.grad_tolerance,
            floor: self.floor,
            seed: None,
            descent: self.descent,
        }
    }

    pub fn acquisition_spec(&self) -> AcquisitionSpec {
        AcquisitionSpec {
            kind: self.acquisition,
            omega: self.omega,
            epsilon: self.epsilon,
            xi: self.xi,
            hazard_rate: self.hazard_rate,
            quadrature_points: self.quadrature_points,
        }
    }

    pub fn synthetic_intensity(&self) -> Result<Option<SyntheticIntensity>> {
        Ok(self.synthetic.map(SyntheticIntensity::from_id).transpose()?)
    }

    pub fn points_per_dim(&self, dim: usize) -> Result<Vec<usize>> {
        match &self.grid_points {
            Some(g) if g.len() == dim => Ok(g.clone()),
            Some(g) if g.len() == 1 => Ok(vec![g[0]; dim]),
            Some(g) => Err(CliError::Config(format!("grid_points has {} entries for {dim} dimensions", g.len()))),
            None => Ok(vec![if dim == 1 { 100 } else { 50 }; dim]),
        }
    }

    pub fn kernel(&self, lower: &[f64], upper: &[f64]) -> Result<KernelSpec> {
        let ls = match &self.lengthscales {
            Some(ls) if ls.len() == lower.len() => ls.clone(),
            Some(ls) => {
                return Err(CliError::Config(format!(
                    "lengthscales has {} entries for {} dimensions",
                    ls.len(),
                    lower.len()
                )))
            }
            None => lower.iter().zip(upper).map(|(a, b)| DEFAULT_LENGTHSCALE_FRACTION * (b - a)).collect(),
        };
        Ok(KernelSpec::new(self.variance, ls)?)
    }

    pub fn region_radius(&self, lower: &[f64], upper: &[f64]) -> f64 {
        self.radius.unwrap_or_else(|| {
            let mean_extent = lower.iter().zip(upper).map(|(a, b)| b - a).sum::<f64>() / lower.len() as f64;
            DEFAULT_RADIUS_FRACTION * mean_extent
        })
    }
}
