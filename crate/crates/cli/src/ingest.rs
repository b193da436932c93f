//! Event CSV reading and writing.
//!
//! One event per row with `d` numeric columns. A first row that is entirely
//! non-numeric and followed by data is taken as a header.

use std::io::Read;
use std::path::Path;

use coxbo::EventSet;

use crate::error::{CliError, Result};

/// Fraction of each axis' extent added on both sides when the domain is
/// inferred from the data.
pub const DOMAIN_PADDING: f64 = 0.01;

/// Rows of the CSV in file order.
pub fn read_points(reader: impl Read) -> Result<Vec<Vec<f64>>> {
    let mut csv = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut rows: Vec<(u64, csv::StringRecord)> = Vec::new();
    for record in csv.records() {
        let record = record.map_err(|e| CliError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(rows.len() as u64 + 1, |p| p.line());
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        rows.push((line, record));
    }
    let Some((_, first)) = rows.first() else {
        return Err(coxbo::Error::Input("event file is empty".into()).into());
    };
    let header = rows.len() > 1 && first.iter().all(|f| f.parse::<f64>().is_err());
    let data = if header { &rows[1..] } else { &rows[..] };
    let dim = data[0].1.len();
    let mut points = Vec::with_capacity(data.len());
    for (line, record) in data {
        if record.len() != dim {
            return Err(CliError::Parse {
                line: *line,
                message: format!("expected {dim} columns, found {}", record.len()),
            });
        }
        let point = record
            .iter()
            .map(|f| match f.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(CliError::Parse { line: *line, message: format!("{f:?} is not a finite number") }),
            })
            .collect::<Result<Vec<f64>>>()?;
        points.push(point);
    }
    Ok(points)
}

/// Reads events from `path`. Without explicit bounds the domain is the data's
/// bounding box padded by [`DOMAIN_PADDING`] on each side.
pub fn ingest_events(path: &Path, bounds: Option<(&[f64], &[f64])>) -> Result<EventSet> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let points = read_points(std::io::BufReader::new(file))?;
    let (lower, upper) = match bounds {
        Some((lo, hi)) => (lo.to_vec(), hi.to_vec()),
        None => padded_bounds(&points),
    };
    Ok(EventSet::from_points(&points, lower, upper)?)
}

pub fn padded_bounds(points: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let dim = points[0].len();
    let mut lower = vec![f64::INFINITY; dim];
    let mut upper = vec![f64::NEG_INFINITY; dim];
    for p in points {
        for k in 0..dim {
            lower[k] = lower[k].min(p[k]);
            upper[k] = upper[k].max(p[k]);
        }
    }
    for k in 0..dim {
        let extent = upper[k] - lower[k];
        let pad = if extent > 0.0 { DOMAIN_PADDING * extent } else { DOMAIN_PADDING * lower[k].abs().max(1.0) };
        lower[k] -= pad;
        upper[k] += pad;
    }
    (lower, upper)
}

/// Events as CSV rows, full precision so that reading them back is exact.
pub fn events_csv(events: &EventSet) -> String {
    let mut out = String::new();
    for i in 0..events.len() {
        let row: Vec<String> = events.events().row(i).iter().map(|x| format!("{x:?}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
