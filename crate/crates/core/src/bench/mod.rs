//! Benchmark harness: instances, success criteria, sweeps, audio experiment.

pub mod audio;
pub mod cs;
pub mod instance;
pub mod sweep;

use crate::linalg::ComplexVector;

/// Entries above this fraction of the largest modulus belong to an estimate's support.
pub const SUPPORT_THRESHOLD: f64 = 0.05;

/// Does the estimate's support (at [`SUPPORT_THRESHOLD`]) equal the true support?
pub fn success_criterion(estimate: &ComplexVector, truth: &ComplexVector) -> bool {
    success_criterion_with(estimate, truth, SUPPORT_THRESHOLD)
}

pub fn success_criterion_with(estimate: &ComplexVector, truth: &ComplexVector, rel: f64) -> bool {
    estimate.len() == truth.len() && estimate.support(rel) == truth.support(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;

    fn v(entries: &[(f64, f64)]) -> ComplexVector {
        ComplexVector::new(entries.iter().map(|&(re, im)| C64::new(re, im)).collect()).unwrap()
    }

    #[test]
    fn criterion_cases() {
        let truth = v(&[(0.0, 0.0), (1.0, 0.0), (0.0, 0.0), (0.0, -1.0)]);
        let rotated = v(&[(0.0, 0.0), (0.0, 1.0), (0.01, 0.0), (1.0, 0.0)]);
        assert!(success_criterion(&rotated, &truth));
        let dense = v(&[(0.3, 0.0), (1.0, 0.0), (0.2, 0.1), (0.9, 0.0)]);
        assert!(!success_criterion(&dense, &truth));
        let missing = v(&[(0.0, 0.0), (1.0, 0.0), (0.0, 0.0), (0.0, 0.0)]);
        assert!(!success_criterion(&missing, &truth));
        assert!(success_criterion(
            &ComplexVector::zeros(4),
            &ComplexVector::zeros(4)
        ));
    }
}
