use coxbo::kernels::{gram, transformed_gram, Grid, KernelSpec, TransformedKernelModel};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn model(m: usize, ls: f64, gamma: f64) -> TransformedKernelModel {
    let grid = Grid::new(vec![0.0], vec![10.0], vec![m]).unwrap();
    TransformedKernelModel::new(KernelSpec::new(1.0, vec![ls]).unwrap(), grid, gamma).unwrap()
}

#[test]
fn nystrom_reproduces_gram_on_grid_points() {
    for (m, ls) in [(10, 1.0), (25, 0.8), (40, 2.0)] {
        let model = model(m, ls, 1.0);
        let pts = model.grid().points().clone();
        let approx = model.nystrom_base_gram(&pts, &pts).unwrap();
        let exact = gram(&pts, &pts, model.kernel()).unwrap();
        let err = (&approx - &exact).amax();
        assert!(err <= 1e-8, "m={m}: max deviation {err}");
    }
}

#[test]
fn large_gamma_limit_recovers_base_gram() {
    let gamma = 1e8;
    let model = model(30, 1.2, gamma);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pts = DMatrix::from_fn(12, 1, |_, _| rng.random_range(0.0..10.0));
    let scaled = transformed_gram(&pts, &pts, &model).unwrap() * gamma;
    let base = model.nystrom_base_gram(&pts, &pts).unwrap();
    let err = (&scaled - &base).norm() / base.norm();
    assert!(err <= 1e-4, "relative error {err}");
}

#[test]
fn two_dimensional_grid_points() {
    let grid = Grid::new(vec![0.0, 0.0], vec![4.0, 3.0], vec![8, 6]).unwrap();
    let model = TransformedKernelModel::new(KernelSpec::new(2.0, vec![0.7, 0.9]).unwrap(), grid, 1.0).unwrap();
    let pts = model.grid().points().clone();
    let approx = model.nystrom_base_gram(&pts, &pts).unwrap();
    let exact = gram(&pts, &pts, model.kernel()).unwrap();
    assert!((&approx - &exact).amax() <= 1e-7);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]
    #[test]
    fn transformed_gram_is_psd(seed in 0u64..1_000, m in 5usize..40, ls in 0.3f64..3.0, gamma in 0.01f64..10.0) {
        let model = model(m, ls, gamma);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = DMatrix::from_fn(15, 1, |_, _| rng.random_range(0.0..10.0));
        let k = transformed_gram(&pts, &pts, &model).unwrap();
        prop_assert_eq!(&k, &k.transpose());
        let min = k.clone().symmetric_eigen().eigenvalues.min();
        prop_assert!(min >= -1e-8 * k.amax().max(1.0), "min eigenvalue {}", min);
    }
}
