use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Posterior over the run length `r` (bins since the last change point).
#[derive(Debug, Clone, PartialEq)]
pub struct RunLengthPosterior {
    masses: Vec<f64>,
    step: usize,
}

impl Default for RunLengthPosterior {
    fn default() -> Self {
        Self::new()
    }
}

impl RunLengthPosterior {
    /// Before any bin is seen all mass sits at `r = 0`.
    pub fn new() -> Self {
        Self { masses: vec![1.0], step: 0 }
    }

    /// `masses[r] = Pr(r)` for `r = 0..=step`.
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn step(&self) -> usize {
        self.step
    }

    /// Probability that the latest bin starts a new segment.
    pub fn changepoint_probability(&self) -> f64 {
        self.masses[0]
    }
}

fn ln_poisson(count: f64, rate: f64) -> f64 {
    if rate <= 0.0 {
        return if count == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    count * rate.ln() - rate - ln_gamma(count + 1.0)
}

/// One step of the run-length recursion with constant hazard `H`.
///
/// `rates[r]` is the predictive Poisson rate of the new bin given run length
/// `r`; `rates[0]` is the rate with no history, i.e. under a fresh segment.
/// Growth: `Pr(r+1) ∝ Pr(r)(1-H)π(count; rates[r])`. Change point:
/// `Pr(0) ∝ H·π(count; rates[0])`, summed over the previous run lengths.
/// Counts may be fractional (expected counts); the pmf is extended through
/// the gamma function.
pub fn cpd_step(
    rlp: &RunLengthPosterior,
    count: f64,
    rates: &[f64],
    hazard: f64,
) -> Result<RunLengthPosterior> {
    if !(hazard > 0.0 && hazard <= 1.0) {
        return Err(Error::input(format!("hazard rate must lie in (0, 1], got {hazard}")));
    }
    if !(count.is_finite() && count >= 0.0) {
        return Err(Error::input(format!("bin count must be non-negative, got {count}")));
    }
    if rates.len() != rlp.masses.len() {
        return Err(Error::input(format!(
            "{} predictive rates for {} run lengths",
            rates.len(),
            rlp.masses.len()
        )));
    }
    if let Some(r) = rates.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
        return Err(Error::input(format!("predictive rate {r} is not a finite non-negative number")));
    }
    let ln_h = hazard.ln();
    let ln_stay = (-hazard).ln_1p();
    let mut logs = Vec::with_capacity(rlp.masses.len() + 1);
    logs.push(ln_h + ln_poisson(count, rates[0]));
    for (r, &p) in rlp.masses.iter().enumerate() {
        logs.push(p.ln() + ln_stay + ln_poisson(count, rates[r]));
    }
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::Numeric("every run length has zero probability".into()));
    }
    let total: f64 = logs.iter().map(|l| (l - max).exp()).sum();
    let ln_z = max + total.ln();
    let masses = logs.iter().map(|l| (l - ln_z).exp()).collect();
    Ok(RunLengthPosterior { masses, step: rlp.step + 1 })
}

/// Predictive rates for every run length at the next bin of `history`:
/// the mean of the last `r` bins shrunk towards `prior_rate` as
/// `(prior_rate + Σ) / (r + 1)`, then multiplied by `inflation`.
pub fn run_length_rates(history: &[f64], prior_rate: f64, inflation: f64) -> Vec<f64> {
    let mut rates = Vec::with_capacity(history.len() + 1);
    let mut sum = 0.0;
    rates.push(prior_rate * inflation);
    for (r, x) in history.iter().rev().enumerate() {
        sum += x;
        rates.push((prior_rate + sum) / (r + 2) as f64 * inflation);
    }
    rates
}

/// Change-point probability after each bin of a count sequence.
///
/// The prior rate is the mean count; `inflation[b]` scales every predictive
/// rate at bin `b` (use 1 for none).
pub fn changepoint_probabilities(counts: &[f64], inflation: &[f64], hazard: f64) -> Result<Vec<f64>> {
    if counts.len() != inflation.len() {
        return Err(Error::input("counts and inflation factors differ in length"));
    }
    if counts.is_empty() {
        return Ok(Vec::new());
    }
    let prior_rate = counts.iter().sum::<f64>() / counts.len() as f64;
    let mut rlp = RunLengthPosterior::new();
    let mut out = Vec::with_capacity(counts.len());
    for (b, &c) in counts.iter().enumerate() {
        let rates = run_length_rates(&counts[..b], prior_rate, inflation[b]);
        rlp = cpd_step(&rlp, c, &rates, hazard)?;
        out.push(rlp.changepoint_probability());
    }
    Ok(out)
}
