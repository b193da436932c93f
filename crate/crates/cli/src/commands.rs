//! The four subcommands, as library functions returning their results.

use std::time::Instant;

use coxbo::bo::{run_bo, BOConfig, BOTrace, Region};
use coxbo::inference::{fit_map, prior_covariance};
use coxbo::kernels::GRAM_JITTER;
use coxbo::metrics::MetricReport;
use coxbo::pointprocess::{thinning_sample, SyntheticIntensity};
use coxbo::{EventSet, Grid, Posterior, TransformedKernelModel};
use nalgebra::DVector;
use serde::Deserialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::ingest::ingest_events;
use crate::output::{GridRecord, MetricsRecord, ReplicateMetrics, ResultRecord, TraceSummary};

/// Where the events of one replicate come from.
enum Source {
    Synthetic(SyntheticIntensity),
    File(EventSet),
}

fn source(cfg: &ExperimentConfig) -> Result<Source> {
    if let Some(s) = cfg.synthetic_intensity()? {
        if cfg.lower.is_some() {
            return Err(CliError::Config("synthetic intensities have a fixed domain; drop lower/upper".into()));
        }
        return Ok(Source::Synthetic(s));
    }
    let Some(path) = &cfg.data else {
        return Err(CliError::Config("no data source: set data or synthetic".into()));
    };
    if cfg.replicates > 1 {
        return Err(CliError::Config("replicates need a synthetic intensity".into()));
    }
    let bounds = cfg.lower.as_deref().zip(cfg.upper.as_deref());
    Ok(Source::File(ingest_events(path, bounds)?))
}

impl Source {
    fn domain(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Source::Synthetic(s) => {
                let (lo, hi) = s.domain();
                (vec![lo], vec![hi])
            }
            Source::File(ev) => (ev.lower().to_vec(), ev.upper().to_vec()),
        }
    }

    fn events(&self, seed: u64) -> Result<EventSet> {
        match self {
            Source::Synthetic(s) => Ok(thinning_sample(&s.intensity(), seed)?),
            Source::File(ev) => Ok(ev.clone()),
        }
    }

    fn truth(&self, grid: &Grid) -> Result<Option<DVector<f64>>> {
        match self {
            Source::Synthetic(s) => {
                let values = (0..grid.len()).map(|j| s.eval(grid.point(j)[0])).collect::<coxbo::Result<Vec<f64>>>()?;
                Ok(Some(DVector::from_vec(values)))
            }
            Source::File(_) => Ok(None),
        }
    }
}

fn replicate_metrics(
    truth: &Option<DVector<f64>>,
    posterior: &Posterior,
    seed: u64,
    events: usize,
) -> Result<Option<ReplicateMetrics>> {
    let Some(truth) = truth else {
        return Ok(None);
    };
    let report = MetricReport::compute(truth, posterior.intensity(), posterior.grid().cell_volume())?;
    Ok(Some(ReplicateMetrics { seed, events, report }))
}

fn record(
    cfg: &ExperimentConfig,
    posterior: &Posterior,
    metrics: Vec<ReplicateMetrics>,
    trace: Option<TraceSummary>,
    started: Instant,
) -> ResultRecord {
    ResultRecord {
        config: cfg.clone(),
        grid: GridRecord::from_grid(posterior.grid()),
        mean: posterior.intensity().iter().copied().collect(),
        std: posterior.intensity_std().iter().copied().collect(),
        metrics: (!metrics.is_empty()).then(|| MetricsRecord::from_replicates(metrics)),
        trace,
        timing_seconds: started.elapsed().as_secs_f64(),
    }
}

/// Fits every replicate; the record carries the first replicate's curves
/// and the median metrics when the truth is known.
pub fn cmd_fit(cfg: &ExperimentConfig) -> Result<(ResultRecord, Posterior)> {
    let started = Instant::now();
    let src = source(cfg)?;
    let (lower, upper) = src.domain();
    let grid = Grid::new(lower.clone(), upper.clone(), cfg.points_per_dim(lower.len())?)?;
    let kernel = cfg.kernel(&lower, &upper)?;
    let model = TransformedKernelModel::new(kernel.clone(), grid.clone(), cfg.gamma)?;
    let prior = prior_covariance(&grid, &kernel, GRAM_JITTER * kernel.variance())?;
    let truth = src.truth(&grid)?;
    let fit_cfg = cfg.fit_config();

    let mut first = None;
    let mut metrics = Vec::new();
    for r in 0..cfg.replicates as u64 {
        let seed = cfg.seed + r;
        let events = src.events(seed)?;
        let fit = fit_map(&events, &model, cfg.link, &fit_cfg)?;
        let posterior = Posterior::from_fit(&fit, &events, &grid, cfg.link, &prior, false)?;
        metrics.extend(replicate_metrics(&truth, &posterior, seed, events.len())?);
        first.get_or_insert(posterior);
    }
    let posterior = first.expect("at least one replicate");
    Ok((record(cfg, &posterior, metrics, None, started), posterior))
}

pub fn bo_config(cfg: &ExperimentConfig, lower: &[f64], upper: &[f64]) -> Result<BOConfig> {
    let radius = cfg.region_radius(lower, upper);
    let centers = if cfg.initial_centers.is_empty() {
        vec![lower.iter().zip(upper).map(|(a, b)| 0.5 * (a + b)).collect()]
    } else {
        cfg.initial_centers.clone()
    };
    Ok(BOConfig {
        budget: cfg.budget,
        initial_regions: centers.into_iter().map(|c| Region::new(c, radius)).collect::<coxbo::Result<_>>()?,
        candidate_centers: cfg.candidate_centers.clone(),
        radius,
        acquisition: cfg.acquisition_spec(),
        fit: cfg.fit_config(),
        kernel: cfg.kernel(lower, upper)?,
        link: cfg.link,
        points_per_dim: cfg.points_per_dim(lower.len())?,
    })
}

/// Runs the BO loop per replicate. The record holds the first replicate's
/// final posterior and trace summary; the full first trace is returned too.
pub fn cmd_bo(cfg: &ExperimentConfig) -> Result<(ResultRecord, BOTrace)> {
    let started = Instant::now();
    let src = source(cfg)?;
    let (lower, upper) = src.domain();
    let bo_cfg = bo_config(cfg, &lower, &upper)?;
    let mut first: Option<BOTrace> = None;
    let mut metrics = Vec::new();
    let mut truth = None;
    for r in 0..cfg.replicates as u64 {
        let seed = cfg.seed + r;
        let events = src.events(seed)?;
        let trace = run_bo(&events, &bo_cfg)?;
        if truth.is_none() {
            truth = Some(src.truth(trace.final_posterior.grid())?);
        }
        let t = truth.as_ref().expect("truth evaluated");
        metrics.extend(replicate_metrics(t, &trace.final_posterior, seed, events.len())?);
        first.get_or_insert(trace);
    }
    let trace = first.expect("at least one replicate");
    let summary = TraceSummary::from_trace(&trace);
    Ok((record(cfg, &trace.final_posterior, metrics, Some(summary), started), trace))
}

/// One thinned sample of the configured benchmark per replicate.
pub fn cmd_synth(cfg: &ExperimentConfig) -> Result<Vec<EventSet>> {
    let Some(s) = cfg.synthetic_intensity()? else {
        return Err(CliError::Config("synth needs a synthetic intensity".into()));
    };
    let intensity = s.intensity();
    (0..cfg.replicates as u64).map(|r| Ok(thinning_sample(&intensity, cfg.seed + r)?)).collect()
}

#[derive(Deserialize)]
struct StoredResult {
    grid: GridRecord,
    mean: Vec<f64>,
}

/// Scores the intensity stored in a result file against the configured benchmark.
pub fn cmd_metrics(cfg: &ExperimentConfig) -> Result<MetricReport> {
    let Some(s) = cfg.synthetic_intensity()? else {
        return Err(CliError::Config("metrics needs a synthetic intensity as ground truth".into()));
    };
    let Some(path) = &cfg.result else {
        return Err(CliError::Config("metrics needs a result file".into()));
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let stored: StoredResult = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        line: e.line() as u64,
        message: e.to_string(),
    })?;
    let grid = stored.grid.to_grid()?;
    if grid.dim() != 1 || stored.mean.len() != grid.len() {
        return Err(coxbo::Error::Input("result grid does not match a one-dimensional benchmark".into()).into());
    }
    let truth = Source::Synthetic(s).truth(&grid)?.expect("synthetic truth");
    Ok(MetricReport::compute(&truth, &DVector::from_vec(stored.mean), grid.cell_volume())?)
}
