use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::objective::{reciprocal, value};
use super::{Descent, DualCoefficients, EventSet, FitConfig};
use crate::error::{Error, Result};
use crate::kernels::TransformedKernelModel;
use crate::link::LinkFunction;

/// Largest step for the functional direction; 0.5 is the fixed-point update.
const MAX_FUNCTIONAL_STEP: f64 = 1.0;
const STEP_GROWTH: f64 = 1.5;
const MIN_STEP: f64 = 1e-14;

/// Result of the MAP fit, before the covariance is attached.
#[derive(Debug, Clone)]
pub struct MapFit {
    pub dual: DualCoefficients,
    /// `ĥ` at the grid points.
    pub h_grid: DVector<f64>,
    /// `ĝ = κ⁻¹(ĥ²)` at the grid points, after clamping into the link range.
    pub mean_g: DVector<f64>,
    /// `λ̂ = κ(ĝ)` at the grid points.
    pub intensity: DVector<f64>,
    pub iterations: usize,
    pub initial_objective: f64,
    pub objective: f64,
    pub grad_norm: f64,
    pub converged: bool,
}

/// Minimizes the dual objective over `α` by gradient descent with
/// backtracking, then evaluates `ĥ`, `ĝ` and `λ̂` on the model grid.
///
/// A model whose `gamma` differs from `cfg.gamma` is re-weighted first.
pub fn fit_map(
    events: &EventSet,
    model: &TransformedKernelModel,
    link: LinkFunction,
    cfg: &FitConfig,
) -> Result<MapFit> {
    cfg.validate()?;
    if events.is_empty() {
        return Err(Error::input("cannot fit an empty event set"));
    }
    if events.dim() != model.grid().dim() {
        return Err(Error::input(format!(
            "events are {}-dimensional, grid is {}-dimensional",
            events.dim(),
            model.grid().dim()
        )));
    }
    let reweighted;
    let model = if cfg.gamma != model.gamma() {
        reweighted = model.with_gamma(cfg.gamma)?;
        &reweighted
    } else {
        model
    };

    let phi = model.feature_map(events.events())?;
    let k = {
        let k = &phi * phi.transpose();
        (&k + k.transpose()) * 0.5
    };
    let n = events.len();
    let mut alpha = match cfg.seed {
        None => DVector::from_element(n, 1.0 / n as f64),
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            DVector::from_fn(n, |_, _| rng.random_range(0.5..1.5) / n as f64)
        }
    };

    // Rescale the start along its own ray: J(cα) is minimized at c² = n / αᵀK̃α.
    let quad = alpha.dot(&(&k * &alpha));
    if quad.is_finite() && quad > 0.0 {
        alpha *= (n as f64 / quad).sqrt();
    }

    let mut h = &k * &alpha;
    let initial_objective = value(&alpha, &h, cfg.floor);
    if !initial_objective.is_finite() {
        return Err(Error::Optimization { iteration: 0, reason: "initial objective is not finite".into() });
    }
    let mut current = initial_objective;
    let (mut step, max_step) = match cfg.descent {
        Descent::Functional => (cfg.learning_rate.min(MAX_FUNCTIONAL_STEP), MAX_FUNCTIONAL_STEP),
        Descent::Euclidean => (cfg.learning_rate, cfg.learning_rate),
    };
    let mut iterations = 0;
    let mut converged = false;
    let mut grad_norm = f64::INFINITY;

    while iterations < cfg.max_iters {
        let residual = &alpha - reciprocal(&h, cfg.floor);
        let grad = &k * &residual * 2.0;
        grad_norm = grad.norm();
        if !grad_norm.is_finite() {
            return Err(Error::Optimization { iteration: iterations, reason: "gradient is not finite".into() });
        }
        if grad_norm <= cfg.grad_tolerance {
            converged = true;
            break;
        }
        let direction = match cfg.descent {
            Descent::Functional => residual * 2.0,
            Descent::Euclidean => grad,
        };
        iterations += 1;
        let mut accepted = false;
        loop {
            let candidate = &alpha - &direction * step;
            let h_candidate = &k * &candidate;
            let j = value(&candidate, &h_candidate, cfg.floor);
            if j.is_finite() && j <= current {
                alpha = candidate;
                h = h_candidate;
                current = j;
                step = (step * STEP_GROWTH).min(max_step);
                accepted = true;
                break;
            }
            step *= 0.5;
            if step < MIN_STEP {
                if !j.is_finite() {
                    return Err(Error::Optimization {
                        iteration: iterations,
                        reason: "objective is not finite for any step size".into(),
                    });
                }
                break;
            }
        }
        if !accepted {
            // No decrease at any step size: stationary up to round-off.
            break;
        }
    }

    let h_grid = model.grid_features() * (phi.transpose() * &alpha);
    let (mean_g, intensity) = link_grid_values(&h_grid, link, cfg.floor)?;
    Ok(MapFit {
        dual: DualCoefficients { alpha },
        h_grid,
        mean_g,
        intensity,
        iterations,
        initial_objective,
        objective: current,
        grad_norm,
        converged,
    })
}

/// `ĝ = κ⁻¹(clamp(ĥ²))` and `λ̂ = κ(ĝ)`.
pub(crate) fn link_grid_values(
    h: &DVector<f64>,
    link: LinkFunction,
    floor: f64,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let mut g = DVector::zeros(h.len());
    for (i, v) in h.iter().enumerate() {
        g[i] = link.kappa_inv(link.clamp_to_range(v * v, floor))?;
    }
    let lambda = g.map(|x| link.kappa(x));
    Ok((g, lambda))
}

/// Transformed Gram matrix `K̃` of the events, the matrix the dual objective uses.
pub fn event_gram(events: &EventSet, model: &TransformedKernelModel) -> Result<DMatrix<f64>> {
    let phi = model.feature_map(events.events())?;
    let k = &phi * phi.transpose();
    Ok((&k + k.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::objective;
    use crate::kernels::{Grid, KernelSpec};

    fn model_1d(lo: f64, hi: f64, m: usize, ls: f64, gamma: f64) -> TransformedKernelModel {
        let grid = Grid::new(vec![lo], vec![hi], vec![m]).unwrap();
        TransformedKernelModel::new(KernelSpec::new(1.0, vec![ls]).unwrap(), grid, gamma).unwrap()
    }

    fn events_1d(ts: &[f64], lo: f64, hi: f64) -> EventSet {
        let pts: Vec<Vec<f64>> = ts.iter().map(|&t| vec![t]).collect();
        EventSet::from_points(&pts, vec![lo], vec![hi]).unwrap()
    }

    #[test]
    fn empty_events_rejected() {
        let model = model_1d(0.0, 1.0, 10, 0.2, 1.0);
        let ev = EventSet::empty(vec![0.0], vec![1.0]).unwrap();
        let err = fit_map(&ev, &model, LinkFunction::Quadratic, &FitConfig::default()).unwrap_err();
        assert_eq!(err.category(), "input");
    }

    #[test]
    fn objective_does_not_increase() {
        let model = model_1d(0.0, 10.0, 50, 0.8, 1.0);
        let ev = events_1d(&[0.5, 1.2, 1.3, 4.0, 4.1, 4.2, 4.4, 8.8], 0.0, 10.0);
        for descent in [Descent::Functional, Descent::Euclidean] {
            let cfg = FitConfig { descent, max_iters: 300, ..FitConfig::default() };
            let fit = fit_map(&ev, &model, LinkFunction::Quadratic, &cfg).unwrap();
            assert!(fit.objective <= fit.initial_objective);
            let k = event_gram(&ev, &model).unwrap();
            let j = objective(&fit.dual.alpha, &k, cfg.floor).unwrap();
            assert!((j - fit.objective).abs() <= 1e-9 * j.abs().max(1.0));
        }
    }

    #[test]
    fn functional_descent_converges() {
        let model = model_1d(0.0, 10.0, 50, 0.8, 1.0);
        let ev = events_1d(&[0.5, 1.2, 1.3, 4.0, 4.1, 4.2, 4.4, 8.8], 0.0, 10.0);
        let fit = fit_map(&ev, &model, LinkFunction::Quadratic, &FitConfig::default()).unwrap();
        assert!(fit.converged, "grad norm {} after {} iterations", fit.grad_norm, fit.iterations);
        assert!(fit.intensity.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn intensity_is_link_of_mean() {
        let model = model_1d(0.0, 10.0, 40, 0.8, 1.0);
        let ev = events_1d(&[1.0, 2.0, 2.5, 7.0], 0.0, 10.0);
        for link in LinkFunction::ALL {
            let fit = fit_map(&ev, &model, link, &FitConfig::default()).unwrap();
            for j in 0..40 {
                assert!((fit.intensity[j] - link.kappa(fit.mean_g[j])).abs() < 1e-12);
                let h2 = fit.h_grid[j] * fit.h_grid[j];
                if h2 > 1e-10 && h2 < link.range_upper() - 1e-6 {
                    assert!((fit.intensity[j] - h2).abs() <= 1e-9 * h2.max(1.0), "{link}: {j}");
                }
            }
        }
    }

    #[test]
    fn seeded_start_reaches_same_optimum() {
        let model = model_1d(0.0, 10.0, 50, 0.8, 1.0);
        let ev = events_1d(&[0.5, 1.2, 1.3, 4.0, 4.1, 4.2, 4.4, 8.8], 0.0, 10.0);
        let a = fit_map(&ev, &model, LinkFunction::Quadratic, &FitConfig::default()).unwrap();
        let cfg = FitConfig { seed: Some(9), ..FitConfig::default() };
        let b = fit_map(&ev, &model, LinkFunction::Quadratic, &cfg).unwrap();
        assert!((a.objective - b.objective).abs() < 1e-6 * a.objective.abs().max(1.0));
        assert!((&a.intensity - &b.intensity).amax() < 1e-3 * a.intensity.amax());
    }

    #[test]
    fn gamma_in_config_overrides_model() {
        let model = model_1d(0.0, 10.0, 30, 0.8, 1.0);
        let ev = events_1d(&[3.0, 3.5, 6.0], 0.0, 10.0);
        let cfg = FitConfig { gamma: 5.0, ..FitConfig::default() };
        let a = fit_map(&ev, &model, LinkFunction::Quadratic, &cfg).unwrap();
        let b = fit_map(&ev, &model.with_gamma(5.0).unwrap(), LinkFunction::Quadratic, &cfg).unwrap();
        assert_eq!(a.intensity, b.intensity);
    }

    #[test]
    fn duplicated_events_double_the_data_term() {
        let model = model_1d(0.0, 10.0, 40, 0.8, 1.0);
        let ts = [1.0, 2.0, 2.5, 7.0];
        let ev = events_1d(&ts, 0.0, 10.0);
        let twice: Vec<f64> = ts.iter().chain(ts.iter()).copied().collect();
        let ev2 = events_1d(&twice, 0.0, 10.0);
        let fit = fit_map(&ev, &model, LinkFunction::Quadratic, &FitConfig::default()).unwrap();
        let k = event_gram(&ev, &model).unwrap();
        let k2 = event_gram(&ev2, &model).unwrap();
        // Split each weight over its two copies: same function ĥ, doubled data term.
        let a = &fit.dual.alpha;
        let a2 = DVector::from_fn(8, |i, _| a[i % 4] / 2.0);
        let data = |alpha: &DVector<f64>, k: &DMatrix<f64>| {
            let h = k * alpha;
            objective(alpha, k, 1e-12).unwrap() - alpha.dot(&h)
        };
        let d1 = data(a, &k);
        let d2 = data(&a2, &k2);
        assert!((d2 - 2.0 * d1).abs() < 1e-9 * d1.abs().max(1.0), "{d2} vs 2·{d1}");
    }
}
