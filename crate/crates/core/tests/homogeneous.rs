use coxbo::inference::{fit_map, FitConfig};
use coxbo::kernels::{Grid, KernelSpec, TransformedKernelModel};
use coxbo::pointprocess::{thinning_sample, IntensityFunction};
use coxbo::LinkFunction;

#[test]
fn constant_intensity_is_recovered_in_the_interior() {
    let rate = 5.0;
    let f = IntensityFunction::constant(rate, vec![0.0], vec![100.0]).unwrap();
    let grid = Grid::new(vec![0.0], vec![100.0], vec![100]).unwrap();
    let kernel = KernelSpec::default_for_domain(&[0.0], &[100.0]).unwrap();
    let model = TransformedKernelModel::new(kernel, grid, 1.0).unwrap();
    let mut means = Vec::new();
    for seed in 0..5 {
        let ev = thinning_sample(&f, seed).unwrap();
        let fit = fit_map(&ev, &model, LinkFunction::Quadratic, &FitConfig::default()).unwrap();
        let interior = fit.intensity.rows(10, 80);
        means.push(interior.mean());
    }
    means.sort_by(f64::total_cmp);
    let median = means[2];
    assert!((median - rate).abs() <= 0.2 * rate, "median interior intensity {median}");
}
