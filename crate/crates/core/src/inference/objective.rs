use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `J(α) = -Σ log max(hᵢ², floor) + αᵀK̃α` with `h = K̃α`.
pub fn objective(alpha: &DVector<f64>, k_tilde: &DMatrix<f64>, floor: f64) -> Result<f64> {
    check(alpha, k_tilde)?;
    let h = k_tilde * alpha;
    Ok(value(alpha, &h, floor))
}

/// `∇_α J = 2K̃(α - r)` where `rᵢ = 1/hᵢ`, or 0 where `hᵢ²` is floored.
pub fn objective_gradient(alpha: &DVector<f64>, k_tilde: &DMatrix<f64>, floor: f64) -> Result<DVector<f64>> {
    check(alpha, k_tilde)?;
    let h = k_tilde * alpha;
    Ok(k_tilde * (alpha - reciprocal(&h, floor)) * 2.0)
}

pub(crate) fn value(alpha: &DVector<f64>, h: &DVector<f64>, floor: f64) -> f64 {
    let data: f64 = h.iter().map(|v| (v * v).max(floor).ln()).sum();
    -data + alpha.dot(h)
}

pub(crate) fn reciprocal(h: &DVector<f64>, floor: f64) -> DVector<f64> {
    h.map(|v| if v * v > floor { 1.0 / v } else { 0.0 })
}

fn check(alpha: &DVector<f64>, k_tilde: &DMatrix<f64>) -> Result<()> {
    if k_tilde.nrows() != k_tilde.ncols() || k_tilde.nrows() != alpha.len() {
        return Err(Error::input(format!(
            "kernel matrix {}x{} does not match {} coefficients",
            k_tilde.nrows(),
            k_tilde.ncols(),
            alpha.len()
        )));
    }
    Ok(())
}
