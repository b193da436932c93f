//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use coxbo::inference::{fit_map, EventSet, FitConfig};
use coxbo::kernels::{gram_symmetric, Grid, KernelSpec, TransformedKernelModel, GRAM_JITTER};
use coxbo::LinkFunction;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A small 1D problem with events placed on grid points.
pub struct TinyInstance {
    pub grid: Grid,
    pub kernel: KernelSpec,
    pub gamma: f64,
    pub event_cells: Vec<usize>,
}

impl TinyInstance {
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.random_range(4..=12);
        let width = rng.random_range(0.5..2.0);
        let grid = Grid::new(vec![0.0], vec![m as f64 * width], vec![m]).unwrap();
        let kernel = KernelSpec::new(1.0, vec![width * rng.random_range(0.8..2.0)]).unwrap();
        let n = rng.random_range(1..=5);
        let event_cells = (0..n).map(|_| rng.random_range(0..m)).collect();
        Self { grid, kernel, gamma: rng.random_range(0.5..2.0), event_cells }
    }

    pub fn events(&self) -> EventSet {
        let pts: Vec<Vec<f64>> = self.event_cells.iter().map(|&j| self.grid.point(j)).collect();
        EventSet::from_points(&pts, self.grid.lower().to_vec(), self.grid.upper().to_vec()).unwrap()
    }

    /// Grid intensity from the dual fit, mapped through `link`.
    pub fn representer_intensity(&self, link: LinkFunction) -> DVector<f64> {
        let model = TransformedKernelModel::new(self.kernel.clone(), self.grid.clone(), self.gamma).unwrap();
        let cfg = FitConfig { gamma: self.gamma, grad_tolerance: 1e-10, max_iters: 20_000, ..FitConfig::default() };
        fit_map(&self.events(), &model, link, &cfg).unwrap().intensity
    }

    /// Grid intensity from Newton's method on the discretized penalized
    /// likelihood, with the same clamp into the link range.
    pub fn direct_intensity(&self, link: LinkFunction) -> DVector<f64> {
        let mut counts = vec![0.0; self.grid.len()];
        for &j in &self.event_cells {
            counts[j] += 1.0;
        }
        let k = gram_symmetric(self.grid.points(), &self.kernel).unwrap();
        let v = direct_grid_fit(&k, &counts, self.grid.cell_volume(), self.gamma);
        v.map(|h| link.kappa(link.kappa_inv(link.clamp_to_range(h * h, 1e-12)).unwrap()))
    }
}

/// Minimizes `-Σ cⱼ log vⱼ² + w vᵀv + γ vᵀK⁻¹v` over grid values `v` by
/// damped Newton steps that keep event cells positive.
pub fn direct_grid_fit(k: &DMatrix<f64>, counts: &[f64], w: f64, gamma: f64) -> DVector<f64> {
    let m = counts.len();
    let mut kj = k.clone();
    for i in 0..m {
        kj[(i, i)] += GRAM_JITTER * k[(i, i)];
    }
    let k_inv = kj.cholesky().expect("jittered Gram is positive definite").inverse();
    let a = DMatrix::identity(m, m) * w + k_inv * gamma;
    let f = |v: &DVector<f64>| {
        let mut val = v.dot(&(&a * v));
        for j in 0..m {
            if counts[j] > 0.0 {
                if v[j] <= 0.0 {
                    return f64::INFINITY;
                }
                val -= counts[j] * (v[j] * v[j]).ln();
            }
        }
        val
    };
    let mut v = DVector::from_element(m, 1.0);
    for _ in 0..200 {
        let grad = &a * &v * 2.0 - DVector::from_fn(m, |j, _| 2.0 * counts[j] / v[j]);
        let mut hess = &a * 2.0;
        for j in 0..m {
            hess[(j, j)] += 2.0 * counts[j] / (v[j] * v[j]);
        }
        let step = hess.cholesky().expect("Newton system is positive definite").solve(&grad);
        if grad.dot(&step) < 1e-24 {
            break;
        }
        let current = f(&v);
        let mut t = 1.0;
        while f(&(&v - &step * t)) > current - 0.25 * t * grad.dot(&step) {
            t *= 0.5;
            assert!(t > 1e-20, "line search failed");
        }
        v -= step * t;
    }
    v
}

/// `‖a - b‖ / ‖b‖`.
pub fn relative_error(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}
