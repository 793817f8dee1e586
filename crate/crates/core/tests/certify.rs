mod common;

use cprl::bench::instance::{gen_ensemble, gen_sparse_real_signal, rng_from_seed, Ensemble};
use cprl::certify::{
    coherence_recovery_bound, combinatorial_oracle, estimate_rip, lifted_zero_norm, mutual_coherence,
    practical_bound_certifies, rip_error_bound, verify_dual_certificate, RipMode, Sampling,
};
use cprl::lifting::{Measurements, SensingSystem};
use cprl::linalg::{ComplexMatrix, ComplexVector, HermitianMatrix, C64};
use cprl::solver::{solve_cprl, SolverConfig};
use proptest::prelude::*;

fn system(ens: Ensemble, m: usize, n: usize, seed: u64) -> SensingSystem {
    gen_ensemble(ens, m, n, &mut rng_from_seed(seed)).unwrap()
}

fn pairwise_coherence(m: &ComplexMatrix) -> f64 {
    let cols: Vec<Vec<C64>> = (0..m.cols()).map(|j| m.column(j).into_vec()).collect();
    let norm = |c: &[C64]| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut best = 0.0f64;
    for p in 0..cols.len() {
        for q in p + 1..cols.len() {
            let ip: C64 = cols[p].iter().zip(&cols[q]).map(|(u, v)| u.conj() * v).sum();
            best = best.max(ip.norm() / (norm(&cols[p]) * norm(&cols[q])));
        }
    }
    best
}

/// `N x n^2` lifted matrix built from the rows of `A` alone.
fn lifted_matrix(a: &ComplexMatrix) -> ComplexMatrix {
    let n = a.cols();
    ComplexMatrix::from_fn(a.rows(), n * n, |m, col| {
        let (i, j) = (col % n, col / n);
        a.get(m, i).conj() * a.get(m, j)
    })
}

#[test]
fn coherence_matches_pairwise_loop() {
    let a = system(Ensemble::Gaussian, 8, 16, 11).matrix().clone();
    let mu = mutual_coherence(&a).unwrap();
    assert!((mu - pairwise_coherence(&a)).abs() <= 1e-12);
}

#[test]
fn coherence_bound_matches_reassembled_lifted_matrix() {
    let sys = system(Ensemble::Gaussian, 40, 3, 5);
    let mu = pairwise_coherence(&lifted_matrix(sys.matrix()));
    let cert = coherence_recovery_bound(&sys).unwrap();
    assert!((cert.value - 0.5 * (1.0 + 1.0 / mu)).abs() <= 1e-10);
    assert_eq!(cert.holds, cert.value > 1.0);
}

#[test]
fn identical_columns_have_unit_coherence() {
    let col = [C64::new(1.0, 2.0), C64::new(-0.5, 0.0), C64::new(0.0, 3.0)];
    let m = ComplexMatrix::from_fn(3, 2, |i, _| col[i]);
    assert!((mutual_coherence(&m).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn exhaustive_rip_is_monotone_in_sparsity() {
    let sys = system(Ensemble::Gaussian, 20, 3, 2);
    let mut prev = 0.0;
    for k in 1..=4 {
        let c = estimate_rip(&sys, k, RipMode::L2, Sampling::Exhaustive, 0).unwrap();
        assert!(c.value >= prev - 1e-12, "k {k}: {} < {prev}", c.value);
        prev = c.value;
    }
}

#[test]
fn exhaustive_rip_rejects_large_dimension() {
    let sys = system(Ensemble::Gaussian, 10, 6, 2);
    assert!(estimate_rip(&sys, 2, RipMode::L2, Sampling::Exhaustive, 0).is_err());
    assert!(estimate_rip(&sys, 2, RipMode::L2, Sampling::Random(20), 0).is_ok());
}

#[test]
fn random_rip_is_reproducible_from_seed() {
    let sys = system(Ensemble::Gaussian, 12, 6, 8);
    let a = estimate_rip(&sys, 3, RipMode::L1, Sampling::Random(30), 17).unwrap();
    let b = estimate_rip(&sys, 3, RipMode::L1, Sampling::Random(30), 17).unwrap();
    assert_eq!(a.value, b.value);
}

#[test]
fn oracle_recovers_scaled_unit_vector() {
    let sys = system(Ensemble::RealGaussian, 8, 4, 21);
    let mut x = vec![0.0; 4];
    x[2] = 1.3;
    let b = sys.measure(&ComplexVector::from_real(&x).unwrap()).unwrap();
    let sol = combinatorial_oracle(&sys, &b, 2).unwrap();
    assert!(sol.unique);
    assert_eq!(sol.support, vec![2]);
    assert!((sol.x[2].abs() - 1.3).abs() < 1e-8);
}

#[test]
fn oracle_solution_reproduces_measurements() {
    for seed in 0..10 {
        let sys = system(Ensemble::RealGaussian, 12, 5, 300 + seed);
        let x = gen_sparse_real_signal(5, 2, &mut rng_from_seed(400 + seed)).unwrap();
        let b = sys.measure(&x).unwrap();
        let sol = combinatorial_oracle(&sys, &b, 2).unwrap();
        let again = sys.measure(&ComplexVector::from_real(&sol.x).unwrap()).unwrap();
        for (u, v) in again.as_slice().iter().zip(b.as_slice()) {
            assert!((u - v).abs() <= 1e-8 * (1.0 + b.norm()));
        }
        assert!(sol.support.len() <= 2);
    }
}

#[test]
fn oracle_rejects_complex_systems() {
    let sys = system(Ensemble::Gaussian, 8, 4, 1);
    let b = Measurements::new(vec![1.0; 8]).unwrap();
    assert!(combinatorial_oracle(&sys, &b, 2).is_err());
}

#[test]
fn dual_certificate_trivial_case_holds() {
    let sys = system(Ensemble::Gaussian, 6, 3, 4);
    let b = Measurements::new(vec![0.0; 6]).unwrap();
    let zero = HermitianMatrix::zeros(3);
    let cert = verify_dual_certificate(&sys, &b, &zero, &[0.0; 6], &zero, 0.5, 1e-6).unwrap();
    assert!(cert.holds, "{}", cert.detail);
}

#[test]
fn dual_certificate_flags_indefinite_slack() {
    let sys = system(Ensemble::Gaussian, 6, 3, 4);
    let b = sys.measure(&common::random_vector(3, 9)).unwrap();
    let a = sys.matrix();
    // Y = I - B*(mu) has smallest eigenvalue 1 - mu ||a_0||^2 when only mu_0 is set.
    let norm0 = a.row(0).iter().map(|z| z.norm_sqr()).sum::<f64>();
    let mut mu = vec![0.0; 6];
    mu[0] = 1.1 / norm0;
    let zero = HermitianMatrix::zeros(3);
    let cert = verify_dual_certificate(&sys, &b, &zero, &mu, &zero, 0.0, 1e-6).unwrap();
    assert!(!cert.holds);
    assert!(
        cert.detail.contains("(b)") && cert.detail.contains("FAILED"),
        "{}",
        cert.detail
    );
}

#[test]
fn converged_solve_passes_dual_certificate() {
    let sys = system(Ensemble::RealGaussian, 10, 4, 33);
    let x = gen_sparse_real_signal(4, 1, &mut rng_from_seed(34)).unwrap();
    let b = sys.measure(&x).unwrap();
    let r = solve_cprl(&sys, &b, &SolverConfig::default()).unwrap();
    assert!(r.converged());
    let cert = verify_dual_certificate(&sys, &b, &r.x, &r.dual_mu, &r.dual_z, r.lambda, 1e-4).unwrap();
    assert!(cert.holds, "{}", cert.detail);
}

#[test]
fn rip_bound_arithmetic() {
    assert_eq!(rip_error_bound(0.0, 3, 1.0, 0.0, 0.0).unwrap(), 0.0);
    assert_eq!(rip_error_bound(0.0, 4, 1.0, 1.0, 0.0).unwrap(), 1.0);
    let limit = 1.0 / (1.0 + 2f64.sqrt());
    assert!(rip_error_bound(limit, 1, 1.0, 0.0, 0.0).is_err());
    assert!(rip_error_bound(0.5, 1, 1.0, 0.0, 0.0).is_err());
    assert!(practical_bound_certifies(0.0, 1, 3.5, true).unwrap());
    assert!(!practical_bound_certifies(0.0, 1, 2.5, true).unwrap());
    assert!(!practical_bound_certifies(0.0, 1, 3.5, false).unwrap());
}

#[test]
fn lifted_zero_norm_counts_outer_product_entries() {
    let x = ComplexVector::from_real(&[0.0, 2.0, 0.0, -1.0]).unwrap();
    assert_eq!(lifted_zero_norm(&HermitianMatrix::outer(&x)), 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn coherence_is_invariant_to_column_scaling(seed in any::<u64>(), s in 0.01f64..100.0) {
        let a = system(Ensemble::Gaussian, 6, 5, seed).matrix().clone();
        let scaled = ComplexMatrix::from_fn(6, 5, |i, j| a.get(i, j) * (s * (j + 1) as f64));
        let (u, v) = (mutual_coherence(&a).unwrap(), mutual_coherence(&scaled).unwrap());
        prop_assert!((u - v).abs() <= 1e-10);
    }

    #[test]
    fn rip_bound_grows_with_tail_and_gap(eps in 0.0f64..0.4, k in 1usize..10, tail in 0.0f64..5.0, gap in 0.0f64..5.0) {
        let base = rip_error_bound(eps, k, 2.0, tail, gap).unwrap();
        prop_assert!(base >= 0.0);
        prop_assert!(rip_error_bound(eps, k, 2.0, tail + 1.0, gap).unwrap() > base);
        prop_assert!(rip_error_bound(eps, k, 2.0, tail, gap + 1.0).unwrap() > base);
    }
}
