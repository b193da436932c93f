//! Base RBF kernel, uniform grids, grid eigensystems and the Nyström
//! approximation of the transformed kernel.

pub(crate) mod eigen;
mod grid;
mod transformed;

pub use eigen::{eigendecompose_grid, kronecker_eigensystem, GridEigensystem};
pub use grid::Grid;
pub use transformed::{nystrom_eigenfunction, transformed_gram, TransformedKernelModel};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative eigenvalue cut-off below which grid eigenpairs are dropped.
pub const EIGEN_TOLERANCE: f64 = 1e-10;

/// Diagonal jitter added to grid Gram matrices, relative to the kernel variance.
pub const GRAM_JITTER: f64 = 1e-8;

/// Default lengthscale as a fraction of the domain extent along each axis.
pub const DEFAULT_LENGTHSCALE_FRACTION: f64 = 0.05;

/// Squared-exponential kernel with one lengthscale per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    variance: f64,
    lengthscales: Vec<f64>,
}

impl KernelSpec {
    pub fn new(variance: f64, lengthscales: Vec<f64>) -> Result<Self> {
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::input(format!("kernel variance must be positive, got {variance}")));
        }
        if lengthscales.is_empty() {
            return Err(Error::input("kernel needs at least one lengthscale"));
        }
        if let Some(bad) = lengthscales.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::input(format!("lengthscales must be positive, got {bad}")));
        }
        Ok(Self { variance, lengthscales })
    }

    /// Unit variance with lengthscales at 5% of the domain extent.
    pub fn default_for_domain(lower: &[f64], upper: &[f64]) -> Result<Self> {
        let ls = lower
            .iter()
            .zip(upper)
            .map(|(l, u)| DEFAULT_LENGTHSCALE_FRACTION * (u - l))
            .collect();
        Self::new(1.0, ls)
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn lengthscales(&self) -> &[f64] {
        &self.lengthscales
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    /// Kernel value without dimension checks.
    #[inline]
    pub fn eval_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut q = 0.0;
        for ((x, y), l) in a.iter().zip(b).zip(&self.lengthscales) {
            let z = (x - y) / l;
            q += z * z;
        }
        self.variance * (-0.5 * q).exp()
    }

    /// One-dimensional unit-variance factor along `axis`.
    pub(crate) fn axis_factor(&self, axis: usize, x: f64, y: f64) -> f64 {
        let z = (x - y) / self.lengthscales[axis];
        (-0.5 * z * z).exp()
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim() {
            return Err(Error::input(format!(
                "point dimension {d} does not match kernel dimension {}",
                self.dim()
            )));
        }
        Ok(())
    }
}

/// `variance · exp(-½ Σₖ ((aₖ - bₖ)/ℓₖ)²)`.
pub fn kernel_eval(a: &[f64], b: &[f64], spec: &KernelSpec) -> Result<f64> {
    spec.check_dim(a.len())?;
    spec.check_dim(b.len())?;
    Ok(spec.eval_unchecked(a, b))
}

/// Cross Gram matrix between the rows of `points_a` (n×d) and `points_b` (m×d).
pub fn gram(points_a: &DMatrix<f64>, points_b: &DMatrix<f64>, spec: &KernelSpec) -> Result<DMatrix<f64>> {
    spec.check_dim(points_a.ncols())?;
    spec.check_dim(points_b.ncols())?;
    let rows_a = rows_of(points_a);
    let rows_b = rows_of(points_b);
    Ok(DMatrix::from_fn(rows_a.len(), rows_b.len(), |i, j| {
        spec.eval_unchecked(&rows_a[i], &rows_b[j])
    }))
}

/// Symmetric Gram matrix of a single point set; exactly symmetric by construction.
pub fn gram_symmetric(points: &DMatrix<f64>, spec: &KernelSpec) -> Result<DMatrix<f64>> {
    spec.check_dim(points.ncols())?;
    let rows = rows_of(points);
    let n = rows.len();
    let mut k = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            let v = spec.eval_unchecked(&rows[i], &rows[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

pub(crate) fn rows_of(points: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..points.nrows())
        .map(|i| points.row(i).iter().copied().collect())
        .collect()
}
