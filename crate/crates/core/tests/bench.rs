use cprl::bench::audio::{
    audio_pipeline_with, read_samples, read_samples_csv, synthetic_note, write_samples_wav, AudioBasis,
};
use cprl::bench::cs::{solve_cs_baseline, CsConfig};
use cprl::bench::instance::{derive_seed, Ensemble};
use cprl::bench::success_criterion;
use cprl::bench::sweep::{
    coherence_contour, run_sweep, run_trial, Instance, Method, Noise, SweepGrid, TrialSpec,
};
use cprl::solver::SolverConfig;

#[test]
fn cs_baseline_recovers_sparse_signal_from_linear_data() {
    for seed in 0..5 {
        let inst = Instance::generate(32, 16, 2, Ensemble::Gaussian, Noise::None, seed).unwrap();
        let z = solve_cs_baseline(&inst.system, &inst.y, &CsConfig::default()).unwrap();
        assert!(success_criterion(&z, &inst.x));
    }
}

#[test]
fn instances_do_not_depend_on_method() {
    let spec = |method| TrialSpec {
        n: 12,
        big_n: 30,
        k: 2,
        ensemble: Ensemble::Gaussian,
        noise: Noise::None,
        method,
        seed: 77,
        solver: SolverConfig::default(),
        greedy: Default::default(),
        cs: CsConfig::default(),
        warm_start: false,
    };
    let a = run_trial(&spec(Method::Cprl)).unwrap();
    let b = run_trial(&spec(Method::CsBaseline)).unwrap();
    assert_eq!(a.truth, b.truth);
    assert!(a.success && b.success);
}

#[test]
fn sweep_is_reproducible_and_independent_of_jobs() {
    let grid = SweepGrid {
        ns: vec![8],
        big_ns: vec![8, 24],
        ks: vec![1],
        methods: vec![Method::Cprl, Method::CsBaseline],
        ensemble: Ensemble::Gaussian,
        trials: 4,
        master_seed: 5,
        ..SweepGrid::default()
    };
    let one = run_sweep(&grid).unwrap();
    let two = run_sweep(&SweepGrid {
        jobs: 2,
        ..grid.clone()
    })
    .unwrap();
    assert_eq!(one.cells.len(), 4);
    for (a, b) in one.cells.iter().zip(&two.cells) {
        assert_eq!((a.successes, a.trials), (b.successes, b.trials));
    }
    assert!(one.cell(8, 24, 1, Method::Cprl).unwrap().rate > 0.5);
    let mut csv = Vec::new();
    one.write_csv(&mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 5);
}

#[test]
fn empty_grid_is_rejected() {
    let grid = SweepGrid {
        methods: vec![],
        ..SweepGrid::default()
    };
    assert!(run_sweep(&grid).is_err());
}

#[test]
fn contour_cells_cover_grid() {
    let cells = coherence_contour(&[4, 6], &[5, 9], 2, 3).unwrap();
    assert_eq!(cells.len(), 4);
    assert!(cells.iter().all(|c| c.mean_bound.is_some_and(|v| v > 0.5)));
}

#[test]
fn sample_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let samples: Vec<f64> = (0..16).map(|i| ((i as f64) * 0.4).sin() * 0.8).collect();
    let wav = dir.path().join("s.wav");
    write_samples_wav(&wav, &samples, 8000).unwrap();
    let back = read_samples(&wav).unwrap();
    assert_eq!(back.len(), samples.len());
    for (a, b) in back.iter().zip(&samples) {
        assert!((a - b).abs() < 1e-4);
    }
    let csv = dir.path().join("s.csv");
    std::fs::write(&csv, "value\n0.5\n-0.25\n1\n").unwrap();
    assert_eq!(read_samples_csv(&csv).unwrap(), vec![0.5, -0.25, 1.0]);
}

#[test]
fn synthetic_note_is_real_and_rejects_aliasing() {
    let basis = AudioBasis::draw(16, 12, 16, 1).unwrap();
    let note = synthetic_note(&basis, 2, 2, 2).unwrap();
    assert_eq!(note.samples.len(), 16);
    assert_eq!(note.coefficients.support(0.0), vec![2, 4, 12, 14]);
    assert!(synthetic_note(&basis, 4, 2, 2).is_err());
}

#[test]
fn audio_pipeline_rejects_non_finite_samples() {
    let basis = AudioBasis::draw(8, 6, 8, derive_seed(1, 0, 0)).unwrap();
    let mut samples = vec![0.1; 8];
    samples[3] = f64::NAN;
    assert!(audio_pipeline_with(&samples, &basis, 1, &SolverConfig::default()).is_err());
}
