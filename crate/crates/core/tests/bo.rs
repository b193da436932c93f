use coxbo::acquisition::{AcquisitionKind, AcquisitionSpec};
use coxbo::bo::{reveal, run_bo, BOConfig, Region};
use coxbo::pointprocess::{thinning_sample, IntensityFunction};
use coxbo::{FitConfig, KernelSpec, LinkFunction};

fn bump() -> IntensityFunction {
    IntensityFunction::new(|t| 0.2 + 8.0 * (-((t[0] - 80.0) / 3.0).powi(2)).exp(), 8.2, vec![0.0], vec![100.0]).unwrap()
}

fn config(kind: AcquisitionKind) -> BOConfig {
    BOConfig {
        budget: 25,
        initial_regions: vec![Region::new(vec![25.0], 2.0).unwrap(), Region::new(vec![60.0], 2.0).unwrap()],
        candidate_centers: Vec::new(),
        radius: 2.0,
        acquisition: AcquisitionSpec { kind, ..AcquisitionSpec::default() },
        fit: FitConfig::default(),
        kernel: KernelSpec::default_for_domain(&[0.0], &[100.0]).unwrap(),
        link: LinkFunction::Quadratic,
        points_per_dim: vec![100],
    }
}

#[test]
fn ucb_finds_the_bump() {
    let mut found = 0;
    for seed in 0..10 {
        let ev = thinning_sample(&bump(), seed).unwrap();
        let trace = run_bo(&ev, &config(AcquisitionKind::Ucb)).unwrap();
        if trace.steps.iter().take(13).any(|s| s.region.contains(&[80.0])) {
            found += 1;
        }
    }
    assert!(found >= 8, "bump found in {found} of 10 runs");
}

#[test]
fn every_acquisition_respects_the_loop_invariants() {
    let ev = thinning_sample(&bump(), 7).unwrap();
    for kind in [AcquisitionKind::Ucb, AcquisitionKind::Idle, AcquisitionKind::Cumulative, AcquisitionKind::Cpd] {
        let trace = run_bo(&ev, &config(kind)).unwrap();
        assert_eq!(trace.steps.len(), 25, "{kind:?}");
        let mut chosen = std::collections::HashSet::new();
        let mut total = 0;
        for s in &trace.steps {
            assert!(chosen.insert(s.selected), "{kind:?} re-selected {}", s.selected);
            assert!(s.total_revealed >= total);
            assert_eq!(s.total_revealed, total.max(s.total_revealed));
            total = s.total_revealed;
            assert!(s.scores[s.selected].is_finite());
        }
        let mut regions = config(kind).initial_regions;
        regions.extend(trace.steps.iter().map(|s| s.region.clone()));
        assert_eq!(reveal(&ev, &regions).points(), trace.revealed.points());
    }
}

#[test]
fn two_dimensional_run_finishes() {
    let f = IntensityFunction::new(
        |t| 1.5 + 20.0 * (-((t[0] - 7.0).powi(2) + (t[1] - 3.0).powi(2)) / 2.0).exp(),
        21.5,
        vec![0.0, 0.0],
        vec![10.0, 10.0],
    )
    .unwrap();
    let ev = thinning_sample(&f, 2).unwrap();
    let cfg = BOConfig {
        budget: 10,
        initial_regions: vec![Region::new(vec![2.0, 2.0], 1.0).unwrap()],
        candidate_centers: Vec::new(),
        radius: 1.0,
        acquisition: AcquisitionSpec::default(),
        fit: FitConfig::default(),
        kernel: KernelSpec::default_for_domain(&[0.0, 0.0], &[10.0, 10.0]).unwrap(),
        link: LinkFunction::Quadratic,
        points_per_dim: vec![20, 20],
    };
    let trace = run_bo(&ev, &cfg).unwrap();
    assert_eq!(trace.steps.len(), 10);
    assert_eq!(trace.candidates.len(), 121);
}
