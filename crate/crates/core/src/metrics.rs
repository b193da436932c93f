//! Distances between a ground-truth and an estimated intensity on a grid.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub l2: f64,
    pub iql50: f64,
    pub iql85: f64,
    pub grid_points_used: usize,
}

impl MetricReport {
    pub fn compute(truth: &DVector<f64>, estimate: &DVector<f64>, cell_volume: f64) -> Result<Self> {
        Ok(Self {
            l2: l2_distance(truth, estimate, cell_volume)?,
            iql50: iql(truth, estimate, 0.5, cell_volume)?,
            iql85: iql(truth, estimate, 0.85, cell_volume)?,
            grid_points_used: truth.len(),
        })
    }
}

/// `√(Σ (λ - λ̂)² Δt)`.
pub fn l2_distance(truth: &DVector<f64>, estimate: &DVector<f64>, cell_volume: f64) -> Result<f64> {
    check(truth, estimate, cell_volume)?;
    let ss: f64 = truth.iter().zip(estimate.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((ss * cell_volume).sqrt())
}

/// Integrated ρ-quantile loss `Σ 2|λ - λ̂|(ρ·[λ > λ̂] + (1-ρ)·[λ ≤ λ̂]) Δt`.
pub fn iql(truth: &DVector<f64>, estimate: &DVector<f64>, rho: f64, cell_volume: f64) -> Result<f64> {
    check(truth, estimate, cell_volume)?;
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::input(format!("rho must lie in (0, 1), got {rho}")));
    }
    let total: f64 = truth
        .iter()
        .zip(estimate.iter())
        .map(|(&a, &b)| {
            let w = if a > b { rho } else { 1.0 - rho };
            2.0 * (a - b).abs() * w
        })
        .sum();
    Ok(total * cell_volume)
}

fn check(truth: &DVector<f64>, estimate: &DVector<f64>, cell_volume: f64) -> Result<()> {
    if truth.len() != estimate.len() {
        return Err(Error::input(format!(
            "truth has {} values, estimate has {}",
            truth.len(),
            estimate.len()
        )));
    }
    if !(cell_volume.is_finite() && cell_volume > 0.0) {
        return Err(Error::input(format!("cell volume must be positive, got {cell_volume}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn identical_curves_have_zero_loss() {
        let a = v(&[1.0, 2.0, 0.5]);
        assert_eq!(l2_distance(&a, &a, 0.1).unwrap(), 0.0);
        assert_eq!(iql(&a, &a, 0.85, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn unit_gap_on_unit_interval() {
        let m = 40;
        let truth = DVector::from_element(m, 3.0);
        let est = DVector::from_element(m, 2.0);
        assert!((l2_distance(&truth, &est, 1.0 / m as f64).unwrap() - 1.0).abs() < 1e-14);
        // Overestimation everywhere with gap 1.
        let over = iql(&est, &truth, 0.85, 1.0 / m as f64).unwrap();
        assert!((over - 0.3).abs() < 1e-12);
    }

    #[test]
    fn l2_matches_direct_sum() {
        let truth = v(&[0.3, 1.7, 2.2, 0.0]);
        let est = v(&[0.5, 1.0, 2.9, 0.4]);
        let direct = ((0.04 + 0.49 + 0.49 + 0.16) * 0.25f64).sqrt();
        let l2 = l2_distance(&truth, &est, 0.25).unwrap();
        assert!((l2 - direct).abs() <= 1e-10 * direct);
    }

    #[test]
    fn report_fields() {
        let r = MetricReport::compute(&v(&[1.0, 2.0]), &v(&[2.0, 2.0]), 0.5).unwrap();
        assert_eq!(r.grid_points_used, 2);
        assert!((r.iql50 - 0.5).abs() < 1e-15);
        assert!((r.l2 - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn invalid_inputs() {
        assert!(l2_distance(&v(&[1.0]), &v(&[1.0, 2.0]), 1.0).is_err());
        assert!(iql(&v(&[1.0]), &v(&[1.0]), 1.0, 1.0).is_err());
        assert!(iql(&v(&[1.0]), &v(&[1.0]), 0.5, 0.0).is_err());
    }

    fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
        (1usize..60).prop_flat_map(|n| {
            (
                prop::collection::vec(0.0f64..20.0, n),
                prop::collection::vec(0.0f64..20.0, n),
                1e-3f64..5.0,
            )
        })
    }

    proptest! {
        #[test]
        fn iql50_is_integrated_absolute_error((a, b, dt) in pair()) {
            let (a, b) = (v(&a), v(&b));
            let l1: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum::<f64>() * dt;
            prop_assert!((iql(&a, &b, 0.5, dt).unwrap() - l1).abs() <= 1e-12 * l1.max(1.0));
        }

        #[test]
        fn iql_swap_symmetry((a, b, dt) in pair(), rho in 0.01f64..0.99) {
            let (a, b) = (v(&a), v(&b));
            let x = iql(&a, &b, rho, dt).unwrap();
            let y = iql(&b, &a, 1.0 - rho, dt).unwrap();
            prop_assert!((x - y).abs() <= 1e-12 * x.max(1.0));
        }

        #[test]
        fn linear_in_cell_volume((a, b, dt) in pair()) {
            let (a, b) = (v(&a), v(&b));
            let i1 = iql(&a, &b, 0.85, dt).unwrap();
            let i2 = iql(&a, &b, 0.85, 2.0 * dt).unwrap();
            prop_assert!((i2 - 2.0 * i1).abs() <= 1e-12 * i2.max(1.0));
            let l1 = l2_distance(&a, &b, dt).unwrap();
            let l2 = l2_distance(&a, &b, 4.0 * dt).unwrap();
            prop_assert!((l2 - 2.0 * l1).abs() <= 1e-12 * l2.max(1.0));
        }
    }
}
