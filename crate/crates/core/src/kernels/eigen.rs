use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigendecomposition `K_xx = U Λ Uᵀ` of a grid Gram matrix, eigenvalues in
/// descending order. Only the leading `rank` pairs are used downstream.
#[derive(Debug, Clone)]
pub struct GridEigensystem {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    rank: usize,
}

impl GridEigensystem {
    fn from_sorted(eigenvalues: DVector<f64>, eigenvectors: DMatrix<f64>, tolerance: f64) -> Result<Self> {
        let max = eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(max.is_finite() && max > 0.0) {
            return Err(Error::DegenerateKernel(format!("largest eigenvalue is {max}")));
        }
        let cutoff = tolerance * max;
        let rank = eigenvalues.iter().take_while(|&&v| v >= cutoff).count();
        if rank == 0 {
            return Err(Error::DegenerateKernel("no eigenvalue above tolerance".into()));
        }
        Ok(Self { eigenvalues, eigenvectors, rank })
    }

    /// All eigenvalues, descending.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// m×m orthonormal eigenvector matrix, columns aligned with `eigenvalues`.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// Number of retained eigenpairs.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Size `m` of the decomposed matrix.
    pub fn size(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn retained_values(&self) -> DVector<f64> {
        self.eigenvalues.rows(0, self.rank).into_owned()
    }

    pub fn retained_vectors(&self) -> DMatrix<f64> {
        self.eigenvectors.columns(0, self.rank).into_owned()
    }

    /// `U Λ Uᵀ` over all stored pairs.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= self.eigenvalues[j];
        }
        scaled * u.transpose()
    }
}

/// Symmetric eigendecomposition of a grid Gram matrix. Eigenvalues below
/// `tolerance · max eigenvalue` are excluded from the retained rank.
pub fn eigendecompose_grid(k_xx: &DMatrix<f64>, tolerance: f64) -> Result<GridEigensystem> {
    check_symmetric(k_xx, 1e-10)?;
    let (values, vectors) = sorted_eigen(k_xx.clone());
    GridEigensystem::from_sorted(values, vectors, tolerance)
}

/// Eigensystem of `scale · (F₁ ⊗ … ⊗ F_d) + jitter · I` assembled from the
/// eigendecompositions of the factors. The eigenvectors of a Kronecker
/// product are the Kronecker products of the factor eigenvectors, and a
/// multiple of the identity shares every eigenvector.
pub fn kronecker_eigensystem(
    factors: &[DMatrix<f64>],
    scale: f64,
    jitter: f64,
    tolerance: f64,
) -> Result<GridEigensystem> {
    if factors.is_empty() {
        return Err(Error::input("kronecker eigensystem needs at least one factor"));
    }
    let mut parts = Vec::with_capacity(factors.len());
    for f in factors {
        check_symmetric(f, 1e-10)?;
        parts.push(sorted_eigen(f.clone()));
    }
    let dims: Vec<usize> = factors.iter().map(|f| f.nrows()).collect();
    let m: usize = dims.iter().product();

    let multi = |mut p: usize| {
        let mut idx = vec![0; dims.len()];
        for k in (0..dims.len()).rev() {
            idx[k] = p % dims[k];
            p /= dims[k];
        }
        idx
    };
    let mut order: Vec<(f64, usize)> = (0..m)
        .map(|p| {
            let idx = multi(p);
            let v: f64 = idx.iter().enumerate().map(|(k, &i)| parts[k].0[i]).product();
            (scale * v + jitter, p)
        })
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let row_idx: Vec<Vec<usize>> = (0..m).map(multi).collect();
    let eigenvalues = DVector::from_iterator(m, order.iter().map(|o| o.0));
    let mut eigenvectors = DMatrix::zeros(m, m);
    for (col, &(_, p)) in order.iter().enumerate() {
        let cidx = &row_idx[p];
        for (row, ridx) in row_idx.iter().enumerate() {
            let mut v = 1.0;
            for k in 0..dims.len() {
                v *= parts[k].1[(ridx[k], cidx[k])];
            }
            eigenvectors[(row, col)] = v;
        }
    }
    GridEigensystem::from_sorted(eigenvalues, eigenvectors, tolerance)
}

/// Eigenpairs of a symmetric matrix sorted by descending eigenvalue.
pub(crate) fn sorted_eigen(a: DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        vectors.set_column(c, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub(crate) fn check_symmetric(a: &DMatrix<f64>, tol: f64) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::input(format!("matrix is {}x{}, expected square", a.nrows(), a.ncols())));
    }
    let scale = a.amax().max(1.0);
    for j in 0..a.ncols() {
        for i in (j + 1)..a.nrows() {
            if (a[(i, j)] - a[(j, i)]).abs() > tol * scale {
                return Err(Error::input(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}
