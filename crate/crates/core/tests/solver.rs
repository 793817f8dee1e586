mod common;

use cprl::bench::instance::{gen_ensemble, gen_sparse_signal, rng_from_seed, Ensemble};
use cprl::bench::success_criterion;
use cprl::greedy::{gcprl, GreedyConfig};
use cprl::lifting::{Measurements, SensingSystem};
use cprl::linalg::{phase_aligned_error, psd_project, ComplexVector};
use cprl::solver::{
    default_lambda_schedule, solve_cprl, solve_cprl_noisy, solve_penalized, solve_phaselift,
    warm_start_solve, SolveStatus, SolverConfig,
};

fn instance(seed: u64, n: usize, m: usize, k: usize) -> (SensingSystem, ComplexVector, Measurements) {
    let mut rng = rng_from_seed(seed);
    let sys = gen_ensemble(Ensemble::Gaussian, m, n, &mut rng).unwrap();
    let x = gen_sparse_signal(n, k, &mut rng).unwrap();
    let b = sys.measure(&x).unwrap();
    (sys, x, b)
}

fn l1(x: &cprl::linalg::HermitianMatrix) -> f64 {
    x.as_slice().iter().map(|z| z.norm()).sum()
}

#[test]
fn cprl_recovers_sparse_signal_and_reports_consistent_objective() {
    for seed in 0..5 {
        let (sys, x, b) = instance(seed, 10, 30, 2);
        let r = solve_cprl(&sys, &b, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        assert!(r.gap >= 0.95);
        assert!(success_criterion(&r.signal, &x));
        assert!(phase_aligned_error(&r.signal, &x) < 1e-3);
        let trace: f64 = (0..10).map(|i| r.x.get(i, i).re).sum();
        assert!((r.objective - (trace + r.lambda * l1(&r.x))).abs() <= 1e-10 * (1.0 + r.objective));
        let p = psd_project(&r.x).unwrap();
        assert!(common::max_abs_diff(&p, &r.x) <= 1e-8);
    }
}

#[test]
fn weak_duality_holds_at_solution() {
    let (sys, _, b) = instance(7, 8, 24, 2);
    let r = solve_cprl(&sys, &b, &SolverConfig::default()).unwrap();
    let dual: f64 = r.dual_mu.iter().zip(b.as_slice()).map(|(m, v)| m * v).sum();
    assert!(dual <= r.objective + 1e-4 * (1.0 + r.objective));
}

#[test]
fn zero_measurements_give_zero_solution() {
    let (sys, _, _) = instance(1, 5, 10, 1);
    let b = Measurements::new(vec![0.0; 10]).unwrap();
    let r = solve_cprl(&sys, &b, &SolverConfig::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Converged);
    assert_eq!(r.x.max_abs(), 0.0);
}

#[test]
fn phaselift_reaches_feasibility() {
    let (sys, _, b) = instance(3, 6, 30, 2);
    let r = solve_phaselift(&sys, &b, &SolverConfig::default()).unwrap();
    assert_eq!(r.lambda, 0.0);
    let fit = sys.apply_b(&r.x).unwrap();
    let res: f64 = fit
        .iter()
        .zip(b.as_slice())
        .map(|(u, v)| (u - v).powi(2))
        .sum::<f64>()
        .sqrt();
    assert!(res <= 1e-4 * (1.0 + b.norm()));
}

#[test]
fn noisy_and_penalized_forms_stay_close_to_truth() {
    let (sys, x, b) = instance(4, 8, 30, 2);
    let cfg = SolverConfig {
        epsilon: 1e-3,
        ..SolverConfig::default()
    };
    let r = solve_cprl_noisy(&sys, &b, &cfg).unwrap();
    assert!(success_criterion(&r.signal, &x));
    let cfg = SolverConfig {
        mu: 1e4,
        max_iters: 20000,
        ..SolverConfig::default()
    };
    let p = solve_penalized(&sys, &b, &cfg).unwrap();
    assert!(
        phase_aligned_error(&p.signal, &x) < 0.05,
        "{}",
        phase_aligned_error(&p.signal, &x)
    );
}

#[test]
fn warm_start_validates_schedule_and_recovers() {
    let (sys, x, b) = instance(5, 8, 30, 2);
    let cfg = SolverConfig {
        epsilon: 1e-3,
        ..SolverConfig::default()
    };
    assert!(warm_start_solve(&sys, &b, &cfg, &[]).is_err());
    assert!(warm_start_solve(&sys, &b, &cfg, &[1.0, 2.0]).is_err());
    let schedule = default_lambda_schedule(&sys, &b).unwrap();
    let r = warm_start_solve(&sys, &b, &cfg, &schedule).unwrap();
    assert!(success_criterion(&r.signal, &x));
}

#[test]
fn invalid_config_is_rejected() {
    let (sys, _, b) = instance(1, 4, 8, 1);
    for cfg in [
        SolverConfig {
            lambda: -1.0,
            ..SolverConfig::default()
        },
        SolverConfig {
            relaxation: 2.5,
            ..SolverConfig::default()
        },
        SolverConfig {
            tol_primal: f64::NAN,
            ..SolverConfig::default()
        },
    ] {
        assert!(solve_cprl(&sys, &b, &cfg).is_err());
    }
}

#[test]
fn greedy_trace_decreases_and_finds_support() {
    let (sys, x, b) = instance(12, 10, 20, 1);
    let (r, trace) = gcprl(&sys, &b, &GreedyConfig::default()).unwrap();
    assert!(trace.rounds.windows(2).all(|w| w[1].w < w[0].w));
    assert_eq!(trace.support(), x.support(0.0).as_slice());
    assert!(success_criterion(&r.signal, &x));
}

#[test]
fn solves_are_deterministic() {
    let (sys, _, b) = instance(9, 6, 18, 2);
    let a = solve_cprl(&sys, &b, &SolverConfig::default()).unwrap();
    let c = solve_cprl(&sys, &b, &SolverConfig::default()).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&c).unwrap()
    );
}
