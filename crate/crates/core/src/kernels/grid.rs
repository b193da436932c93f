use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Uniform product grid of cell centers over an axis-aligned box.
///
/// Points are ordered with the last axis varying fastest, so a grid with
/// `points_per_dim = [n₁, n₂]` stores point `(i, j)` at row `i·n₂ + j`.
/// This matches the ordering of the Kronecker product `Σ₁ ⊗ Σ₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    lower: Vec<f64>,
    upper: Vec<f64>,
    points_per_dim: Vec<usize>,
    points: DMatrix<f64>,
    cell_volume: f64,
}

impl Grid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, points_per_dim: Vec<usize>) -> Result<Self> {
        let d = lower.len();
        if d == 0 || upper.len() != d || points_per_dim.len() != d {
            return Err(Error::input("grid bounds and resolution must share a non-zero dimension"));
        }
        for k in 0..d {
            if !(lower[k].is_finite() && upper[k].is_finite() && lower[k] < upper[k]) {
                return Err(Error::input(format!(
                    "grid axis {k}: lower {} must be below upper {}",
                    lower[k], upper[k]
                )));
            }
            if points_per_dim[k] == 0 {
                return Err(Error::input(format!("grid axis {k} has no points")));
            }
        }
        let m: usize = points_per_dim.iter().product();
        let axes: Vec<Vec<f64>> = (0..d)
            .map(|k| axis_centers(lower[k], upper[k], points_per_dim[k]))
            .collect();
        let mut points = DMatrix::zeros(m, d);
        for p in 0..m {
            let idx = unravel(p, &points_per_dim);
            for k in 0..d {
                points[(p, k)] = axes[k][idx[k]];
            }
        }
        let cell_volume = (0..d)
            .map(|k| (upper[k] - lower[k]) / points_per_dim[k] as f64)
            .product();
        Ok(Self { lower, upper, points_per_dim, points, cell_volume })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Number of grid points `m`.
    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn points_per_dim(&self) -> &[usize] {
        &self.points_per_dim
    }

    /// m×d matrix of cell centers.
    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn point(&self, p: usize) -> Vec<f64> {
        self.points.row(p).iter().copied().collect()
    }

    /// Volume of one cell, the `Δt` of the Riemann sum.
    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    pub fn domain_volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }

    pub fn cell_width(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / self.points_per_dim[axis] as f64
    }

    /// Cell-center coordinates along one axis.
    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        axis_centers(self.lower[axis], self.upper[axis], self.points_per_dim[axis])
    }

    /// Multi-index of a flat point index.
    pub fn unravel(&self, p: usize) -> Vec<usize> {
        unravel(p, &self.points_per_dim)
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.points_per_dim)
            .fold(0, |acc, (i, n)| acc * n + i)
    }

    pub fn contains(&self, t: &[f64]) -> bool {
        t.len() == self.dim()
            && t.iter()
                .enumerate()
                .all(|(k, &x)| x >= self.lower[k] && x <= self.upper[k])
    }

    /// Index of the cell containing `t`, i.e. the grid point within half a
    /// cell width of `t` along every axis. Points on the upper boundary
    /// belong to the last cell.
    pub fn cell_of(&self, t: &[f64]) -> Option<usize> {
        if !self.contains(t) {
            return None;
        }
        let idx: Vec<usize> = (0..self.dim())
            .map(|k| {
                let raw = ((t[k] - self.lower[k]) / self.cell_width(k)).floor() as usize;
                raw.min(self.points_per_dim[k] - 1)
            })
            .collect();
        Some(self.ravel(&idx))
    }
}

fn axis_centers(lower: f64, upper: f64, n: usize) -> Vec<f64> {
    let w = (upper - lower) / n as f64;
    (0..n).map(|i| lower + (i as f64 + 0.5) * w).collect()
}

fn unravel(mut p: usize, dims: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        idx[k] = p % dims[k];
        p /= dims[k];
    }
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_centers_and_volume() {
        let g = Grid::new(vec![0.0], vec![10.0], vec![5]).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g.axis_coords(0), vec![1.0, 3.0, 5.0, 7.0, 9.0]);
        assert_eq!(g.cell_volume(), 2.0);
        assert_eq!(g.domain_volume(), 10.0);
    }

    #[test]
    fn last_axis_varies_fastest() {
        let g = Grid::new(vec![0.0, 0.0], vec![2.0, 3.0], vec![2, 3]).unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g.point(0), vec![0.5, 0.5]);
        assert_eq!(g.point(1), vec![0.5, 1.5]);
        assert_eq!(g.point(3), vec![1.5, 0.5]);
        assert_eq!(g.unravel(4), vec![1, 1]);
        assert_eq!(g.ravel(&[1, 2]), 5);
        assert!((g.cell_volume() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn points_strictly_inside() {
        let g = Grid::new(vec![-1.0, 2.0], vec![1.0, 2.5], vec![7, 4]).unwrap();
        for p in 0..g.len() {
            let x = g.point(p);
            assert!(x[0] > -1.0 && x[0] < 1.0 && x[1] > 2.0 && x[1] < 2.5);
        }
    }

    #[test]
    fn cell_lookup() {
        let g = Grid::new(vec![0.0], vec![10.0], vec![5]).unwrap();
        assert_eq!(g.cell_of(&[0.0]), Some(0));
        assert_eq!(g.cell_of(&[3.9]), Some(1));
        assert_eq!(g.cell_of(&[10.0]), Some(4));
        assert_eq!(g.cell_of(&[10.1]), None);
    }

    #[test]
    fn rejects_bad_bounds() {
        assert!(Grid::new(vec![1.0], vec![1.0], vec![3]).is_err());
        assert!(Grid::new(vec![0.0], vec![1.0], vec![0]).is_err());
        assert!(Grid::new(vec![0.0, 0.0], vec![1.0], vec![3]).is_err());
    }
}
