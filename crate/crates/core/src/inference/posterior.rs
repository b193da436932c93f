use nalgebra::{DMatrix, DVector};

use super::covariance::{observed_posterior_variance, posterior_covariance, posterior_variance, PriorCovariance};
use super::fit::MapFit;
use super::{DualCoefficients, EventSet};
use crate::error::{Error, Result};
use crate::kernels::Grid;
use crate::link::LinkFunction;

/// Laplace posterior of the latent function on the grid.
#[derive(Debug, Clone)]
pub struct Posterior {
    grid: Grid,
    link: LinkFunction,
    mean_g: DVector<f64>,
    intensity: DVector<f64>,
    std: DVector<f64>,
    covariance: Option<DMatrix<f64>>,
    dual: Option<DualCoefficients>,
}

impl Posterior {
    /// Attaches the Laplace covariance to a MAP fit. With `full_covariance`
    /// false only the marginal standard deviations are computed.
    pub fn from_fit(
        fit: &MapFit,
        events: &EventSet,
        grid: &Grid,
        link: LinkFunction,
        prior: &PriorCovariance,
        full_covariance: bool,
    ) -> Result<Self> {
        let (covariance, var) = if full_covariance {
            let cov = posterior_covariance(&fit.mean_g, events, grid, link, prior)?;
            let var = cov.diagonal();
            (Some(cov), var)
        } else {
            (None, posterior_variance(&fit.mean_g, events, grid, link, prior)?)
        };
        Ok(Self {
            grid: grid.clone(),
            link,
            mean_g: fit.mean_g.clone(),
            intensity: fit.intensity.clone(),
            std: var.map(f64::sqrt),
            covariance,
            dual: Some(fit.dual.clone()),
        })
    }

    /// Marginal posterior when only the `observed` grid cells were watched.
    /// Unwatched cells contribute no integral term, so their uncertainty
    /// stays close to the prior.
    pub fn from_fit_observed(
        fit: &MapFit,
        events: &EventSet,
        grid: &Grid,
        link: LinkFunction,
        prior: &PriorCovariance,
        observed: &[bool],
    ) -> Result<Self> {
        let var = observed_posterior_variance(&fit.mean_g, events, grid, link, prior, observed)?;
        Ok(Self {
            grid: grid.clone(),
            link,
            mean_g: fit.mean_g.clone(),
            intensity: fit.intensity.clone(),
            std: var.map(f64::sqrt),
            covariance: None,
            dual: Some(fit.dual.clone()),
        })
    }

    /// Posterior with no data: constant mean `κ⁻¹(base_intensity)` and the
    /// prior marginal standard deviations.
    pub fn from_prior(
        grid: &Grid,
        link: LinkFunction,
        prior: &PriorCovariance,
        base_intensity: f64,
        full_covariance: bool,
    ) -> Result<Self> {
        if prior.size() != grid.len() {
            return Err(Error::input("prior size does not match grid"));
        }
        let g0 = link.kappa_inv(base_intensity)?;
        let mean_g = DVector::from_element(grid.len(), g0);
        let intensity = mean_g.map(|g| link.kappa(g));
        let std = prior.diagonal().map(|v| v.max(0.0).sqrt());
        let covariance = full_covariance.then(|| prior.assembled());
        Ok(Self { grid: grid.clone(), link, mean_g, intensity, std, covariance, dual: None })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn link(&self) -> LinkFunction {
        self.link
    }

    /// `ĝ` at the grid points.
    pub fn mean_g(&self) -> &DVector<f64> {
        &self.mean_g
    }

    /// `λ̂ = κ(ĝ)` at the grid points.
    pub fn intensity(&self) -> &DVector<f64> {
        &self.intensity
    }

    /// Marginal posterior standard deviation of `g` at the grid points.
    pub fn std(&self) -> &DVector<f64> {
        &self.std
    }

    /// Delta-method standard deviation of the intensity, `|κ̇(ĝ)|·σ`.
    pub fn intensity_std(&self) -> DVector<f64> {
        self.mean_g.zip_map(&self.std, |g, s| self.link.kappa_dot(g).abs() * s)
    }

    pub fn covariance(&self) -> Option<&DMatrix<f64>> {
        self.covariance.as_ref()
    }

    pub fn dual(&self) -> Option<&DualCoefficients> {
        self.dual.as_ref()
    }

    /// Multilinear interpolation of a grid field at `x`.
    pub fn interpolate(&self, field: &DVector<f64>, x: &[f64]) -> Result<f64> {
        interpolate(&self.grid, field, x)
    }
}

/// Posterior mean and standard deviation of `g` at arbitrary points inside
/// the domain, interpolated multilinearly between grid cell centers.
/// Between the boundary and the outermost centers the edge value is held.
pub fn posterior_at(posterior: &Posterior, query: &DMatrix<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
    let grid = posterior.grid();
    if query.ncols() != grid.dim() {
        return Err(Error::input(format!(
            "query has {} columns, grid has dimension {}",
            query.ncols(),
            grid.dim()
        )));
    }
    let mut mean = DVector::zeros(query.nrows());
    let mut std = DVector::zeros(query.nrows());
    for i in 0..query.nrows() {
        let x: Vec<f64> = query.row(i).iter().copied().collect();
        mean[i] = interpolate(grid, posterior.mean_g(), &x)?;
        std[i] = interpolate(grid, posterior.std(), &x)?;
    }
    Ok((mean, std))
}

pub(crate) fn interpolate(grid: &Grid, field: &DVector<f64>, x: &[f64]) -> Result<f64> {
    if !grid.contains(x) {
        return Err(Error::input(format!("query {x:?} lies outside the domain")));
    }
    let d = grid.dim();
    let mut base = vec![0usize; d];
    let mut frac = vec![0.0; d];
    for k in 0..d {
        let n = grid.points_per_dim()[k];
        let s = ((x[k] - grid.lower()[k]) / grid.cell_width(k) - 0.5).clamp(0.0, (n - 1) as f64);
        let i0 = (s.floor() as usize).min(n.saturating_sub(2));
        base[k] = i0;
        frac[k] = if n == 1 { 0.0 } else { s - i0 as f64 };
    }
    let mut total = 0.0;
    let mut idx = vec![0usize; d];
    for corner in 0..(1usize << d) {
        let mut weight = 1.0;
        for k in 0..d {
            let upper = (corner >> k) & 1 == 1;
            weight *= if upper { frac[k] } else { 1.0 - frac[k] };
            idx[k] = base[k] + usize::from(upper);
        }
        if weight == 0.0 {
            continue;
        }
        total += weight * field[grid.ravel(&idx)];
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::prior_covariance;
    use crate::kernels::KernelSpec;

    fn posterior_with(grid: &Grid, mean: DVector<f64>, std: DVector<f64>) -> Posterior {
        Posterior {
            grid: grid.clone(),
            link: LinkFunction::Quadratic,
            intensity: mean.map(|g| g * g),
            mean_g: mean,
            std,
            covariance: None,
            dual: None,
        }
    }

    #[test]
    fn exact_at_grid_points() {
        let grid = Grid::new(vec![0.0, 0.0], vec![1.0, 2.0], vec![3, 4]).unwrap();
        let mean = DVector::from_fn(12, |i, _| (i as f64).sin());
        let std = DVector::from_fn(12, |i, _| i as f64);
        let post = posterior_with(&grid, mean.clone(), std.clone());
        let (m, s) = posterior_at(&post, grid.points()).unwrap();
        assert!((m - mean).amax() < 1e-15);
        assert!((s - std).amax() < 1e-15);
    }

    #[test]
    fn midpoint_is_average() {
        let grid = Grid::new(vec![0.0], vec![4.0], vec![4]).unwrap();
        let post = posterior_with(
            &grid,
            DVector::from_vec(vec![1.0, 3.0, 4.0, 8.0]),
            DVector::from_element(4, 0.5),
        );
        let q = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 0.1]);
        let (m, s) = posterior_at(&post, &q).unwrap();
        assert!((m[0] - 2.0).abs() < 1e-15);
        assert!((m[1] - 3.5).abs() < 1e-15);
        assert_eq!(m[2], 1.0);
        assert!(s.iter().all(|&v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn constant_field_stays_constant() {
        let grid = Grid::new(vec![0.0, -1.0], vec![1.0, 1.0], vec![5, 5]).unwrap();
        let post = posterior_with(&grid, DVector::from_element(25, 2.5), DVector::from_element(25, 0.1));
        let q = DMatrix::from_row_slice(3, 2, &[0.0, -1.0, 0.33, 0.77, 1.0, 1.0]);
        let (m, _) = posterior_at(&post, &q).unwrap();
        assert!(m.iter().all(|&v| (v - 2.5).abs() < 1e-14));
    }

    #[test]
    fn outside_domain_rejected() {
        let grid = Grid::new(vec![0.0], vec![1.0], vec![4]).unwrap();
        let post = posterior_with(&grid, DVector::zeros(4), DVector::zeros(4));
        let err = posterior_at(&post, &DMatrix::from_element(1, 1, 1.5)).unwrap_err();
        assert_eq!(err.category(), "input");
    }

    #[test]
    fn prior_posterior_uses_prior_std() {
        let grid = Grid::new(vec![0.0], vec![1.0], vec![6]).unwrap();
        let spec = KernelSpec::new(2.0, vec![0.3]).unwrap();
        let prior = prior_covariance(&grid, &spec, 1e-8).unwrap();
        let post = Posterior::from_prior(&grid, LinkFunction::Quadratic, &prior, 1e-3, false).unwrap();
        assert!(post.std().iter().all(|&s| (s - 2f64.sqrt()).abs() < 1e-6));
        assert!(post.intensity().iter().all(|&l| (l - 1e-3).abs() < 1e-15));
        assert!(post.dual().is_none());
    }
}
