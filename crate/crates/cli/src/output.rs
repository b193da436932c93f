//! Result records and file output.

use std::io::Write;
use std::path::Path;

use coxbo::bo::{BOTrace, StepRecord};
use coxbo::metrics::MetricReport;
use coxbo::{Grid, Posterior};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

/// Top-level JSON document written by `fit` and `bo`.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRecord {
    pub config: ExperimentConfig,
    pub grid: GridRecord,
    /// Intensity estimate at the grid points.
    pub mean: Vec<f64>,
    /// Delta-method standard deviation of the intensity.
    pub std: Vec<f64>,
    pub metrics: Option<MetricsRecord>,
    pub trace: Option<TraceSummary>,
    pub timing_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub points_per_dim: Vec<usize>,
    pub points: Vec<Vec<f64>>,
}

impl GridRecord {
    pub fn from_grid(grid: &Grid) -> Self {
        Self {
            lower: grid.lower().to_vec(),
            upper: grid.upper().to_vec(),
            points_per_dim: grid.points_per_dim().to_vec(),
            points: (0..grid.len()).map(|j| grid.point(j)).collect(),
        }
    }

    pub fn to_grid(&self) -> Result<Grid> {
        Ok(Grid::new(self.lower.clone(), self.upper.clone(), self.points_per_dim.clone())?)
    }
}

/// Median metrics over replicates, followed by each replicate's values.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsRecord {
    #[serde(flatten)]
    pub median: MetricReport,
    pub replicates: Vec<ReplicateMetrics>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplicateMetrics {
    pub seed: u64,
    pub events: usize,
    #[serde(flatten)]
    pub report: MetricReport,
}

impl MetricsRecord {
    pub fn from_replicates(replicates: Vec<ReplicateMetrics>) -> Self {
        let pick = |f: fn(&MetricReport) -> f64| median(replicates.iter().map(|r| f(&r.report)).collect());
        let median = MetricReport {
            l2: pick(|m| m.l2),
            iql50: pick(|m| m.iql50),
            iql85: pick(|m| m.iql85),
            grid_points_used: replicates[0].report.grid_points_used,
        };
        Self { median, replicates }
    }
}

pub fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Step-level summary of a BO run; the full trace goes to its own file.
#[derive(Debug, Clone, Serialize)]
pub struct TraceSummary {
    pub candidates: usize,
    pub revealed: usize,
    pub steps: Vec<StepSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StepSummary {
    pub step: usize,
    pub selected: usize,
    pub center: Vec<f64>,
    pub radius: f64,
    pub new_events: usize,
    pub total_revealed: usize,
    /// Explored candidates are written as `null`.
    pub scores: Vec<Option<f64>>,
}

impl TraceSummary {
    pub fn from_trace(trace: &BOTrace) -> Self {
        Self {
            candidates: trace.candidates.len(),
            revealed: trace.revealed.len(),
            steps: trace.steps.iter().map(StepSummary::from_record).collect(),
        }
    }
}

impl StepSummary {
    fn from_record(s: &StepRecord) -> Self {
        Self {
            step: s.step,
            selected: s.selected,
            center: s.region.center().to_vec(),
            radius: s.region.radius(),
            new_events: s.new_events.len(),
            total_revealed: s.total_revealed,
            scores: s.scores.iter().map(|v| v.is_finite().then_some(*v)).collect(),
        }
    }
}

/// Full BO trace, including posterior snapshots and step durations.
#[derive(Debug, Serialize)]
pub struct TraceFile<'a> {
    pub candidates: Vec<Vec<f64>>,
    pub radius: f64,
    pub steps: &'a [StepRecord],
}

impl<'a> TraceFile<'a> {
    pub fn new(trace: &'a BOTrace) -> Self {
        Self {
            candidates: trace.candidates.iter().map(|r| r.center().to_vec()).collect(),
            radius: trace.candidates.first().map_or(0.0, |r| r.radius()),
            steps: &trace.steps,
        }
    }
}

/// Grid points with the mean and standard deviation of the intensity.
pub fn curve_csv(posterior: &Posterior) -> String {
    let grid = posterior.grid();
    let mut out = String::new();
    let header: Vec<String> = (0..grid.dim()).map(|k| format!("x{k}")).collect();
    out.push_str(&header.join(","));
    out.push_str(",mean,std\n");
    let std = posterior.intensity_std();
    for j in 0..grid.len() {
        for x in grid.point(j) {
            out.push_str(&format!("{x:?},"));
        }
        out.push_str(&format!("{:?},{:?}\n", posterior.intensity()[j], std[j]));
    }
    out
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::io("<json>", std::io::Error::other(e)))?;
    text.push('\n');
    Ok(text)
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        write_atomic(&path, "first").unwrap();
        write_atomic(&path, "second").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn grid_record_round_trip() {
        let grid = Grid::new(vec![0.0, 1.0], vec![2.0, 3.0], vec![2, 3]).unwrap();
        let rec = GridRecord::from_grid(&grid);
        assert_eq!(rec.points.len(), 6);
        assert_eq!(rec.to_grid().unwrap(), grid);
    }
}
