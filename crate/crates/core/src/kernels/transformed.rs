use nalgebra::{DMatrix, DVector};

use super::eigen::{eigendecompose_grid, kronecker_eigensystem, GridEigensystem};
use super::{gram, gram_symmetric, Grid, KernelSpec, EIGEN_TOLERANCE, GRAM_JITTER};
use crate::error::{Error, Result};

/// Nyström estimate of the transformed kernel `k̃` on a fixed grid.
///
/// Grid eigenpairs `(λᵢ, uᵢ)` of `K_xx` give Mercer estimates
/// `η̂ᵢ = λᵢ·w` and `φ̂ᵢ(t) = k_tx·uᵢ / (λᵢ √w)` with quadrature weight
/// `w` equal to the cell volume. On a unit-volume domain `w = 1/m` and these
/// are the usual `λᵢ/m` and `√m·k_tx·uᵢ/λᵢ`. The transformed kernel is
/// `k̃(a, b) = Σᵢ η̂ᵢ/(η̂ᵢ+γ) φ̂ᵢ(a) φ̂ᵢ(b)`.
///
/// The eigensystem depends only on the grid and kernel; changing `gamma` or
/// the event set reuses it.
#[derive(Debug, Clone)]
pub struct TransformedKernelModel {
    kernel: KernelSpec,
    grid: Grid,
    eigensystem: GridEigensystem,
    gamma: f64,
    // Columns scaled so that k̃(a, b) = Φ(a)·Φ(b)ᵀ.
    scale: DVector<f64>,
    grid_features: DMatrix<f64>,
}

impl TransformedKernelModel {
    /// Builds the grid eigensystem of `K_xx + jitter·I` from the per-axis
    /// Kronecker factors of the RBF kernel.
    pub fn new(kernel: KernelSpec, grid: Grid, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        if kernel.dim() != grid.dim() {
            return Err(Error::input(format!(
                "kernel dimension {} does not match grid dimension {}",
                kernel.dim(),
                grid.dim()
            )));
        }
        let factors: Vec<DMatrix<f64>> = (0..grid.dim())
            .map(|k| {
                let xs = grid.axis_coords(k);
                DMatrix::from_fn(xs.len(), xs.len(), |i, j| kernel.axis_factor(k, xs[i], xs[j]))
            })
            .collect();
        let jitter = GRAM_JITTER * kernel.variance();
        let eigensystem = kronecker_eigensystem(&factors, kernel.variance(), jitter, EIGEN_TOLERANCE)?;
        let mut model = Self::assemble(kernel, grid, eigensystem, gamma);
        // K_xx uᵢ = (λᵢ - jitter) uᵢ, so the grid features need no Gram matrix.
        let u = model.eigensystem.retained_vectors();
        let mut phi = u;
        for (i, mut col) in phi.column_iter_mut().enumerate() {
            col *= (model.eigensystem.eigenvalues()[i] - jitter) * model.scale[i];
        }
        model.grid_features = phi;
        Ok(model)
    }

    /// Uses a dense eigendecomposition of the grid Gram matrix. Only
    /// practical for small grids; the result matches [`Self::new`].
    pub fn new_dense(kernel: KernelSpec, grid: Grid, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        let mut k = gram_symmetric(grid.points(), &kernel)?;
        let jitter = GRAM_JITTER * kernel.variance();
        for i in 0..k.nrows() {
            k[(i, i)] += jitter;
        }
        let eigensystem = eigendecompose_grid(&k, EIGEN_TOLERANCE)?;
        let mut model = Self::assemble(kernel, grid, eigensystem, gamma);
        model.grid_features = model.feature_map(model.grid.points())?;
        Ok(model)
    }

    fn assemble(kernel: KernelSpec, grid: Grid, eigensystem: GridEigensystem, gamma: f64) -> Self {
        let w = grid.cell_volume();
        let scale = eigensystem
            .retained_values()
            .map(|l| 1.0 / (l * (l * w + gamma)).sqrt());
        Self { kernel, grid, eigensystem, gamma, scale, grid_features: DMatrix::zeros(0, 0) }
    }

    /// Same kernel and grid with a different penalty, reusing the eigensystem.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        let mut out = Self::assemble(self.kernel.clone(), self.grid.clone(), self.eigensystem.clone(), gamma);
        let mut phi = self.grid_features.clone();
        for (i, mut col) in phi.column_iter_mut().enumerate() {
            col *= out.scale[i] / self.scale[i];
        }
        out.grid_features = phi;
        Ok(out)
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn eigensystem(&self) -> &GridEigensystem {
        &self.eigensystem
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn rank(&self) -> usize {
        self.eigensystem.rank()
    }

    /// Eigenvalue estimate `η̂ᵢ`.
    pub fn eta_hat(&self, i: usize) -> Result<f64> {
        self.check_index(i)?;
        Ok(self.eigensystem.eigenvalues()[i] * self.grid.cell_volume())
    }

    /// Shrinkage coefficient `η̂ᵢ / (η̂ᵢ + γ)` of the transformed kernel.
    pub fn eigen_coefficient(&self, i: usize) -> Result<f64> {
        let eta = self.eta_hat(i)?;
        Ok(eta / (eta + self.gamma))
    }

    /// All retained shrinkage coefficients.
    pub fn eigen_coefficients(&self) -> DVector<f64> {
        let w = self.grid.cell_volume();
        self.eigensystem
            .retained_values()
            .map(|l| l * w / (l * w + self.gamma))
    }

    /// `Φ(P)` with `Φ(P)·Φ(Q)ᵀ = k̃(P, Q)`; n×rank.
    pub fn feature_map(&self, points: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let k = gram(points, self.grid.points(), &self.kernel)?;
        let mut phi = k * self.eigensystem.retained_vectors();
        for (i, mut col) in phi.column_iter_mut().enumerate() {
            col *= self.scale[i];
        }
        Ok(phi)
    }

    /// Feature map evaluated at the grid points; cached at construction.
    pub fn grid_features(&self) -> &DMatrix<f64> {
        &self.grid_features
    }

    /// Base-kernel Nyström reconstruction `K̂ = K_ax U Λ⁻¹ Uᵀ K_xb`, with `Λ`
    /// the eigenvalues of `K_xx` itself (jitter removed) so that `K̂ = K` on
    /// the grid. Pairs left with no mass after removing the jitter are dropped.
    pub fn nystrom_base_gram(&self, points_a: &DMatrix<f64>, points_b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let u = self.eigensystem.retained_vectors();
        let jitter = GRAM_JITTER * self.kernel.variance();
        let cutoff = EIGEN_TOLERANCE * self.eigensystem.eigenvalues()[0];
        let inv_sqrt = self
            .eigensystem
            .retained_values()
            .map(|l| if l - jitter > cutoff { 1.0 / (l - jitter).sqrt() } else { 0.0 });
        let project = |p: &DMatrix<f64>| -> Result<DMatrix<f64>> {
            let mut f = gram(p, self.grid.points(), &self.kernel)? * &u;
            for (i, mut col) in f.column_iter_mut().enumerate() {
                col *= inv_sqrt[i];
            }
            Ok(f)
        };
        let fa = project(points_a)?;
        let fb = project(points_b)?;
        Ok(fa * fb.transpose())
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.rank() {
            return Err(Error::Index { index: i, rank: self.rank() });
        }
        Ok(())
    }
}

/// Nyström eigenfunction estimate `φ̂ᵢ(t)`.
pub fn nystrom_eigenfunction(t: &[f64], i: usize, model: &TransformedKernelModel) -> Result<f64> {
    model.check_index(i)?;
    let grid = model.grid();
    if t.len() != grid.dim() {
        return Err(Error::input(format!(
            "point dimension {} does not match grid dimension {}",
            t.len(),
            grid.dim()
        )));
    }
    let u = model.eigensystem().eigenvectors().column(i);
    let mut dot = 0.0;
    for j in 0..grid.len() {
        let x: Vec<f64> = grid.points().row(j).iter().copied().collect();
        dot += model.kernel().eval_unchecked(t, &x) * u[j];
    }
    let lambda = model.eigensystem().eigenvalues()[i];
    Ok(dot / (lambda * grid.cell_volume().sqrt()))
}

/// Transformed kernel matrix `k̃(points_a, points_b)`. Exactly symmetric when
/// both arguments are the same point set.
pub fn transformed_gram(
    points_a: &DMatrix<f64>,
    points_b: &DMatrix<f64>,
    model: &TransformedKernelModel,
) -> Result<DMatrix<f64>> {
    if model.rank() == 0 {
        return Err(Error::DegenerateKernel("no retained eigenpairs".into()));
    }
    let fa = model.feature_map(points_a)?;
    if points_a == points_b {
        let k = &fa * fa.transpose();
        return Ok((&k + k.transpose()) * 0.5);
    }
    let fb = model.feature_map(points_b)?;
    Ok(fa * fb.transpose())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::input(format!("gamma must be positive, got {gamma}")));
    }
    Ok(())
}
