use nalgebra::{DMatrix, DVector};

use super::EventSet;
use crate::error::{Error, Result};
use crate::kernels::eigen::{kronecker_eigensystem, sorted_eigen};
use crate::kernels::{Grid, KernelSpec, EIGEN_TOLERANCE};
use crate::link::LinkFunction;

/// Eigenvalues of `I + VᵀBV` closer to zero than this count as singular.
const SINGULAR_EIGENVALUE: f64 = 1e-12;

/// Gaussian-process prior covariance on a product grid, `Σ = Σ₁ ⊗ … ⊗ Σ_d`.
///
/// Each factor is the one-dimensional Gram matrix of that axis plus jitter;
/// the kernel variance is carried by the first factor. The eigensystem is
/// assembled from the factor eigensystems and truncated at the usual
/// relative tolerance.
#[derive(Debug, Clone)]
pub struct PriorCovariance {
    factors: Vec<DMatrix<f64>>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl PriorCovariance {
    pub fn factors(&self) -> &[DMatrix<f64>] {
        &self.factors
    }

    /// Dense `Σ`, m×m.
    pub fn assembled(&self) -> DMatrix<f64> {
        let mut out = self.factors[0].clone();
        for f in &self.factors[1..] {
            out = out.kronecker(f);
        }
        out
    }

    pub fn size(&self) -> usize {
        self.eigenvectors.nrows()
    }

    /// Retained eigenvalues, descending.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// m×r retained eigenvectors.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// Prior marginal variances `diag(Σ)` within the retained subspace.
    pub fn diagonal(&self) -> DVector<f64> {
        weighted_row_norms(&self.eigenvectors, &self.eigenvalues)
    }
}

pub fn prior_covariance(grid: &Grid, spec: &KernelSpec, jitter: f64) -> Result<PriorCovariance> {
    if spec.dim() != grid.dim() {
        return Err(Error::input(format!(
            "kernel dimension {} does not match grid dimension {}",
            spec.dim(),
            grid.dim()
        )));
    }
    if !(jitter.is_finite() && jitter >= 0.0) {
        return Err(Error::input(format!("jitter must be non-negative, got {jitter}")));
    }
    let factors: Vec<DMatrix<f64>> = (0..grid.dim())
        .map(|k| {
            let xs = grid.axis_coords(k);
            let scale = if k == 0 { spec.variance() } else { 1.0 };
            let mut f = DMatrix::from_fn(xs.len(), xs.len(), |i, j| scale * spec.axis_factor(k, xs[i], xs[j]));
            for i in 0..xs.len() {
                f[(i, i)] += jitter;
            }
            f
        })
        .collect();
    let es = kronecker_eigensystem(&factors, 1.0, 0.0, EIGEN_TOLERANCE)?;
    Ok(PriorCovariance {
        eigenvalues: es.retained_values(),
        eigenvectors: es.retained_vectors(),
        factors,
    })
}

/// Diagonal of the log-likelihood Hessian `W` in its Riemann-sum form:
/// `-κ̈(ĝⱼ)Δt` for every cell plus `(κ̈κ - κ̇²)/κ²` at `ĝⱼ` once per event
/// falling in cell `j`.
pub fn data_hessian_diagonal(
    g_hat: &DVector<f64>,
    events: &EventSet,
    grid: &Grid,
    link: LinkFunction,
) -> Result<DVector<f64>> {
    hessian_diagonal(g_hat, events, grid, link, None)
}

/// [`data_hessian_diagonal`] when only the cells flagged in `observed` were
/// watched: the integral term is dropped everywhere else.
pub fn observed_hessian_diagonal(
    g_hat: &DVector<f64>,
    events: &EventSet,
    grid: &Grid,
    link: LinkFunction,
    observed: &[bool],
) -> Result<DVector<f64>> {
    hessian_diagonal(g_hat, events, grid, link, Some(observed))
}

fn hessian_diagonal(
    g_hat: &DVector<f64>,
    events: &EventSet,
    grid: &Grid,
    link: LinkFunction,
    observed: Option<&[bool]>,
) -> Result<DVector<f64>> {
    if g_hat.len() != grid.len() {
        return Err(Error::input(format!("mean has {} entries, grid has {}", g_hat.len(), grid.len())));
    }
    if let Some(mask) = observed {
        if mask.len() != grid.len() {
            return Err(Error::input(format!("observed mask has {} entries, grid has {}", mask.len(), grid.len())));
        }
    }
    let dt = grid.cell_volume();
    let mut w = DVector::from_fn(g_hat.len(), |j, _| {
        if observed.is_none_or(|mask| mask[j]) {
            -link.kappa_ddot(g_hat[j]) * dt
        } else {
            0.0
        }
    });
    for p in events.points() {
        let j = grid
            .cell_of(&p)
            .ok_or_else(|| Error::input(format!("event {p:?} lies outside the grid")))?;
        let g = g_hat[j];
        let (k, kd, kdd) = (link.kappa(g), link.kappa_dot(g), link.kappa_ddot(g));
        let term = (kdd * k - kd * kd) / (k * k);
        if !term.is_finite() {
            return Err(Error::Numeric(format!("log-likelihood curvature is not finite at grid point {j}")));
        }
        w[j] += term;
    }
    Ok(w)
}

/// Laplace covariance `A⁻¹ = (Σ⁻¹ - W)⁻¹`, symmetrized and with a
/// non-negative diagonal.
pub fn posterior_covariance(
    g_hat: &DVector<f64>,
    events: &EventSet,
    grid: &Grid,
    link: LinkFunction,
    prior: &PriorCovariance,
) -> Result<DMatrix<f64>> {
    let solver = Solver::new(g_hat, events, grid, link, prior, None)?;
    let mut cov = solver.full();
    cov = (&cov + cov.transpose()) * 0.5;
    let shift = psd_shift(&cov.diagonal())?;
    for i in 0..cov.nrows() {
        cov[(i, i)] += shift;
    }
    Ok(cov)
}

/// Diagonal of [`posterior_covariance`] without forming the full matrix.
pub fn posterior_variance(
    g_hat: &DVector<f64>,
    events: &EventSet,
    grid: &Grid,
    link: LinkFunction,
    prior: &PriorCovariance,
) -> Result<DVector<f64>> {
    variance(g_hat, events, grid, link, prior, None)
}

/// [`posterior_variance`] with the integral term restricted to `observed` cells.
pub fn observed_posterior_variance(
    g_hat: &DVector<f64>,
    events: &EventSet,
    grid: &Grid,
    link: LinkFunction,
    prior: &PriorCovariance,
    observed: &[bool],
) -> Result<DVector<f64>> {
    variance(g_hat, events, grid, link, prior, Some(observed))
}

fn variance(
    g_hat: &DVector<f64>,
    events: &EventSet,
    grid: &Grid,
    link: LinkFunction,
    prior: &PriorCovariance,
    observed: Option<&[bool]>,
) -> Result<DVector<f64>> {
    let solver = Solver::new(g_hat, events, grid, link, prior, observed)?;
    let diag = solver.diagonal();
    let shift = psd_shift(&diag)?;
    Ok(diag.add_scalar(shift))
}

/// Jitter escalating ×10 from 1e-10 until every diagonal entry is non-negative.
fn psd_shift(diag: &DVector<f64>) -> Result<f64> {
    let min = diag.min();
    if min >= 0.0 {
        return Ok(0.0);
    }
    if !min.is_finite() {
        return Err(Error::Numeric("posterior covariance has non-finite diagonal".into()));
    }
    let mut eps = 1e-10;
    while min + eps < 0.0 {
        eps *= 10.0;
    }
    Ok(eps)
}

/// `A⁻¹` represented through the prior eigenbasis `Σ = V Vᵀ`,
/// `V = Q D^{1/2}`, as `V (I + VᵀBV)⁻¹ Vᵀ` with `B = -W`.
enum Solver<'a> {
    /// `B = c·I + E` with `E` supported on a few cells `S`:
    /// `A⁻¹ = C - C[:,S] (E_S⁻¹ + C[S,S])⁻¹ C[S,:]`, `C = Q diag(d/(1+cd)) Qᵀ`.
    LowRank { q: &'a DMatrix<f64>, f: DVector<f64>, cs: DMatrix<f64>, y: DMatrix<f64> },
    /// `I + VᵀBV = P diag(μ) Pᵀ`, `A⁻¹ = (VP) diag(1/μ) (VP)ᵀ`.
    Dense { vp: DMatrix<f64>, inv_mu: DVector<f64> },
}

impl<'a> Solver<'a> {
    fn new(
        g_hat: &DVector<f64>,
        events: &EventSet,
        grid: &Grid,
        link: LinkFunction,
        prior: &'a PriorCovariance,
        observed: Option<&[bool]>,
    ) -> Result<Self> {
        if prior.size() != grid.len() {
            return Err(Error::input(format!("prior has size {}, grid has {} points", prior.size(), grid.len())));
        }
        let b = -hessian_diagonal(g_hat, events, grid, link, observed)?;
        if let Some(s) = Self::low_rank(&b, prior) {
            return Ok(s);
        }
        Self::dense(&b, prior)
    }

    fn low_rank(b: &DVector<f64>, prior: &'a PriorCovariance) -> Option<Self> {
        let m = b.len();
        // c is the value shared by most cells, e.g. the constant curvature of
        // the quadratic link away from events, or zero outside the watched cells.
        let tol = 1e-9 * b.amax().max(1e-300);
        let c = {
            let mut sorted: Vec<f64> = b.iter().copied().collect();
            sorted.sort_by(f64::total_cmp);
            let (mut best, mut best_len, mut start) = (sorted[0], 0, 0);
            for i in 1..=m {
                if i == m || sorted[i] - sorted[start] > tol {
                    if i - start > best_len {
                        (best, best_len) = (sorted[start], i - start);
                    }
                    start = i;
                }
            }
            best
        };
        let support: Vec<usize> = (0..m).filter(|&j| (b[j] - c).abs() > tol).collect();
        if support.len() * 2 > m {
            return None;
        }
        let d = prior.eigenvalues();
        let q = prior.eigenvectors();
        let f = d.map(|di| di / (1.0 + c * di));
        if f.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return None;
        }
        let k = support.len();
        if k == 0 {
            return Some(Solver::LowRank { q, f, cs: DMatrix::zeros(m, 0), y: DMatrix::zeros(0, m) });
        }
        let qs = DMatrix::from_fn(k, q.ncols(), |s, i| q[(support[s], i)] * f[i]);
        let cs = q * qs.transpose();
        let mut g = DMatrix::from_fn(k, k, |a, bb| cs[(support[a], bb)]);
        for (s, &j) in support.iter().enumerate() {
            g[(s, s)] += 1.0 / (b[j] - c);
        }
        g = (&g + g.transpose()) * 0.5;
        let y = g.lu().solve(&cs.transpose())?;
        if y.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some(Solver::LowRank { q, f, cs, y })
    }

    fn dense(b: &DVector<f64>, prior: &PriorCovariance) -> Result<Self> {
        let sqrt_d = prior.eigenvalues().map(f64::sqrt);
        let mut v = prior.eigenvectors().clone();
        for (i, mut col) in v.column_iter_mut().enumerate() {
            col *= sqrt_d[i];
        }
        let mut bv = v.clone();
        for (j, mut row) in bv.row_iter_mut().enumerate() {
            row *= b[j];
        }
        let mut inner = v.transpose() * bv;
        for i in 0..inner.nrows() {
            inner[(i, i)] += 1.0;
        }
        inner = (&inner + inner.transpose()) * 0.5;
        let (mu, p) = sorted_eigen(inner);
        let mut shift = 0.0;
        let mut eps = 1e-10;
        while mu.iter().any(|x| (x + shift).abs() < SINGULAR_EIGENVALUE) {
            if eps > 1e-2 {
                return Err(Error::Conditioning("posterior precision is singular after jitter escalation".into()));
            }
            shift = eps;
            eps *= 10.0;
        }
        let inv_mu = mu.map(|x| 1.0 / (x + shift));
        Ok(Solver::Dense { vp: v * p, inv_mu })
    }

    fn diagonal(&self) -> DVector<f64> {
        match self {
            Solver::LowRank { q, f, cs, y } => {
                let mut diag = weighted_row_norms(q, f);
                for j in 0..diag.len() {
                    diag[j] -= cs.row(j).transpose().dot(&y.column(j));
                }
                diag
            }
            Solver::Dense { vp, inv_mu } => weighted_row_norms(vp, inv_mu),
        }
    }

    fn full(&self) -> DMatrix<f64> {
        match self {
            Solver::LowRank { q, f, cs, y } => {
                let mut qf: DMatrix<f64> = (*q).clone();
                for (i, mut col) in qf.column_iter_mut().enumerate() {
                    col *= f[i];
                }
                qf * q.transpose() - cs * y
            }
            Solver::Dense { vp, inv_mu } => {
                let mut scaled = vp.clone();
                for (i, mut col) in scaled.column_iter_mut().enumerate() {
                    col *= inv_mu[i];
                }
                scaled * vp.transpose()
            }
        }
    }
}

/// `Σₖ M[j,k]² w[k]` for every row `j`.
fn weighted_row_norms(m: &DMatrix<f64>, w: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(m.nrows());
    for (k, col) in m.column_iter().enumerate() {
        for (j, v) in col.iter().enumerate() {
            out[j] += v * v * w[k];
        }
    }
    out
}
