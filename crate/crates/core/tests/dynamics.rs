use vortexprop::evolve::RunConfig;
use vortexprop::lattice::site_equivalence_classes;
use vortexprop::observables::check_class_degeneracy;
use vortexprop::{run_exact, run_trotter, RunResult, SystemKind, SystemParams};

fn config(kind: SystemKind) -> RunConfig {
    RunConfig::for_kind(kind, &SystemParams::default()).unwrap()
}

fn max_over<F: Fn(&vortexprop::observables::SampleRecord) -> f64>(run: &RunResult, f: F) -> f64 {
    run.samples.iter().map(f).fold(0.0, f64::max)
}

#[test]
fn melon_run_shape() {
    let run = run_trotter(&config(SystemKind::Melon)).unwrap();
    assert_eq!(run.samples.len(), 61);
    assert_eq!(run.samples.last().unwrap().step, 1200);
    assert!((run.samples.last().unwrap().time_over_t - 4.0).abs() < 1e-12);
    assert!(run.samples.windows(2).all(|w| w[0].step + 20 == w[1].step));
    assert_eq!(run.samples[0].fidelity0, 1.0);
}

#[test]
fn combined_run_shape() {
    let mut cfg = config(SystemKind::Combined);
    cfg.auto_track = 0;
    let run = run_trotter(&cfg).unwrap();
    assert_eq!(cfg.n_steps().unwrap(), 480);
    assert_eq!(run.samples.len(), 241);
    assert_eq!(run.site_labels.len(), 13);
}

#[test]
fn meron_and_antimeron_are_mirror_images() {
    // Complementary initial states: site magnetizations are exact negatives.
    for run_fn in [run_trotter, run_exact] {
        let a = run_fn(&config(SystemKind::Melon)).unwrap();
        let b = run_fn(&config(SystemKind::AntiMelon)).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            for (p, q) in x.m_z.iter().zip(&y.m_z) {
                assert!((p + q).abs() < 1e-10);
            }
            assert!((x.fidelity0 - y.fidelity0).abs() < 1e-10);
        }
    }
}

#[test]
fn corner_and_edge_sites_move_together() {
    let classes = site_equivalence_classes(&config(SystemKind::Melon).system).unwrap();
    assert_eq!(
        classes,
        vec![vec!['a', 'c', 'e', 'g'], vec!['b', 'd', 'f', 'h']]
    );
    for kind in [SystemKind::Melon, SystemKind::AntiMelon] {
        let exact = run_exact(&config(kind)).unwrap();
        let spread = check_class_degeneracy(&exact.samples, &exact.site_labels, &classes).unwrap();
        assert!(spread.iter().all(|s| *s < 1e-10), "{spread:?}");
        // The fixed term order of a depth-1 step breaks the symmetry slightly.
        let trotter = run_trotter(&config(kind)).unwrap();
        let spread =
            check_class_degeneracy(&trotter.samples, &trotter.site_labels, &classes).unwrap();
        assert!(spread.iter().all(|s| *s < 0.02), "{spread:?}");
    }
}

#[test]
fn transverse_moments_vanish() {
    // Every term flips an even number of spins, so Z parity is conserved.
    let run = run_trotter(&config(SystemKind::Melon)).unwrap();
    let transverse = max_over(&run, |s| {
        s.m_x
            .iter()
            .chain(&s.m_y)
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    });
    assert!(transverse < 1e-12);
}

#[test]
fn exact_runs_conserve_energy() {
    for kind in [SystemKind::Melon, SystemKind::AntiMelon] {
        let run = run_exact(&config(kind)).unwrap();
        assert!(max_over(&run, |s| s.energy.abs()) < 1e-10);
    }
    let mut cfg = RunConfig::for_kind(
        SystemKind::Xxz,
        &SystemParams {
            n: 8,
            delta: 2.0,
            chi: None,
        },
    )
    .unwrap();
    cfg.total_over_t = 5.0;
    let run = run_exact(&cfg).unwrap();
    let e0 = run.samples[0].energy;
    assert!((e0 - (-14.0)).abs() < 1e-12);
    assert!(max_over(&run, |s| (s.energy - e0).abs()) < 1e-10);
}

#[test]
fn zero_length_run_is_the_initial_record() {
    let mut cfg = config(SystemKind::Combined);
    cfg.total_over_t = 0.0;
    let run = run_trotter(&cfg).unwrap();
    assert_eq!(run.samples.len(), 1);
    let s = &run.samples[0];
    assert_eq!(s.fidelity0, 1.0);
    // Seven of the thirteen spins start down.
    assert_eq!(s.magnetization, -1.0);
    assert_eq!(s.amp_norms[0], 1.0);
}
