//! Random instances: sparse signals, sensing ensembles, measurement noise.

use std::f64::consts::PI;

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lifting::{dft_matrix, Measurements, Provenance, SensingSystem};
use crate::linalg::{ComplexMatrix, ComplexVector, C64};

pub type TrialRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes `(master, cell, trial)` into an independent per-trial seed (splitmix64 finalizer).
pub fn derive_seed(master: u64, cell: u64, trial: u64) -> u64 {
    let mut z = master ^ cell.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ trial.wrapping_mul(0xD1B5_4A32_D192_ED03);
    for _ in 0..2 {
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    /// i.i.d. complex standard normal entries (real and imaginary parts `N(0, 1/2)`).
    Gaussian,
    /// `A = R F`, `R` complex Gaussian `N x n`, `F` the unitary DFT.
    RandomFourier,
    /// `N` distinct random rows of the `n x n` unitary DFT.
    PartialFourierRows,
    /// i.i.d. real standard normal entries.
    RealGaussian,
}

impl Ensemble {
    pub fn name(self) -> &'static str {
        match self {
            Ensemble::Gaussian => "gaussian",
            Ensemble::RandomFourier => "rf",
            Ensemble::PartialFourierRows => "partial_fourier",
            Ensemble::RealGaussian => "real_gaussian",
        }
    }
}

impl std::str::FromStr for Ensemble {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Ensemble::Gaussian),
            "rf" | "random_fourier" => Ok(Ensemble::RandomFourier),
            "partial_fourier" | "pf" => Ok(Ensemble::PartialFourierRows),
            "real_gaussian" | "real" => Ok(Ensemble::RealGaussian),
            other => invalid(format!("unknown ensemble '{other}'")),
        }
    }
}

pub fn complex_gaussian(rng: &mut impl Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

pub fn real_gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| C64::new(StandardNormal.sample(rng), 0.0))
}

/// `k`-sparse vector with unit-modulus, uniform-phase nonzeros at distinct random positions.
pub fn gen_sparse_signal(n: usize, k: usize, rng: &mut impl Rng) -> Result<ComplexVector> {
    if k > n {
        return invalid(format!("sparsity {k} exceeds dimension {n}"));
    }
    let mut x = vec![C64::new(0.0, 0.0); n];
    for i in sample(rng, n, k).into_iter() {
        x[i] = C64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI));
    }
    ComplexVector::new(x)
}

/// `k`-sparse real vector with entries `+-1` at distinct random positions.
pub fn gen_sparse_real_signal(n: usize, k: usize, rng: &mut impl Rng) -> Result<ComplexVector> {
    if k > n {
        return invalid(format!("sparsity {k} exceeds dimension {n}"));
    }
    let mut x = vec![0.0; n];
    for i in sample(rng, n, k).into_iter() {
        let mag: f64 = rng.gen_range(0.5..1.5);
        x[i] = if rng.gen::<bool>() { mag } else { -mag };
    }
    ComplexVector::from_real(&x)
}

/// `A = R F` for a given projection `R` (`N x n`).
pub fn random_fourier_system(r: &ComplexMatrix) -> Result<SensingSystem> {
    let a = r.matmul(&dft_matrix(r.cols()))?;
    SensingSystem::new(a)
}

pub fn gen_ensemble(ensemble: Ensemble, big_n: usize, n: usize, rng: &mut impl Rng) -> Result<SensingSystem> {
    if big_n == 0 || n == 0 {
        return invalid(format!("invalid dimensions N={big_n}, n={n}"));
    }
    let sys = match ensemble {
        Ensemble::Gaussian => SensingSystem::new(complex_gaussian_matrix(big_n, n, rng))?,
        Ensemble::RealGaussian => SensingSystem::new(real_gaussian_matrix(big_n, n, rng))?,
        Ensemble::RandomFourier => random_fourier_system(&complex_gaussian_matrix(big_n, n, rng))?,
        Ensemble::PartialFourierRows => {
            if big_n > n {
                return invalid(format!("cannot pick {big_n} distinct rows of a {n}-point DFT"));
            }
            let mut rows: Vec<usize> = sample(rng, n, big_n).into_vec();
            rows.sort_unstable();
            SensingSystem::new(dft_matrix(n).select_rows(&rows)?)?
        }
    };
    Ok(sys.with_provenance(Provenance {
        kind: ensemble.name().to_string(),
        seed: None,
        n,
        big_n,
    }))
}

/// Adds i.i.d. `Uniform(-amplitude, amplitude)` noise; negative results are kept.
pub fn add_noise(b: &Measurements, amplitude: f64, rng: &mut impl Rng) -> Result<Measurements> {
    if amplitude < 0.0 || !amplitude.is_finite() {
        return invalid(format!("noise amplitude must be nonnegative, got {amplitude}"));
    }
    if amplitude == 0.0 {
        return Ok(b.clone());
    }
    Measurements::new(
        b.as_slice()
            .iter()
            .map(|v| v + rng.gen_range(-amplitude..amplitude))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_signal_shapes() {
        let mut rng = rng_from_seed(1);
        assert_eq!(gen_sparse_signal(5, 0, &mut rng).unwrap().norm(), 0.0);
        let one = gen_sparse_signal(1, 1, &mut rng).unwrap();
        assert!((one.get(0).norm() - 1.0).abs() < 1e-15);
        let x = gen_sparse_signal(64, 2, &mut rng).unwrap();
        let nz: Vec<f64> = x.moduli().into_iter().filter(|&m| m > 0.0).collect();
        assert_eq!(nz.len(), 2);
        assert!(nz.iter().all(|m| (m - 1.0).abs() <= 1e-12));
        assert!(gen_sparse_signal(3, 4, &mut rng).is_err());
    }

    #[test]
    fn rf_with_identity_projection_is_dft() {
        let sys = random_fourier_system(&ComplexMatrix::identity(8)).unwrap();
        for z in sys.matrix().as_slice() {
            assert!((z.norm() - 1.0 / 8f64.sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn gaussian_entry_variance() {
        let mut rng = rng_from_seed(11);
        let sys = gen_ensemble(Ensemble::Gaussian, 32, 64, &mut rng).unwrap();
        let entries = sys.matrix().as_slice();
        let var = entries.iter().map(|z| z.norm_sqr()).sum::<f64>() / entries.len() as f64;
        assert!((var - 1.0).abs() < 0.15, "variance {var}");
    }

    #[test]
    fn partial_fourier_rows_orthogonal() {
        let mut rng = rng_from_seed(5);
        let sys = gen_ensemble(Ensemble::PartialFourierRows, 32, 64, &mut rng).unwrap();
        let a = sys.matrix();
        for i in 0..32 {
            for j in 0..32 {
                let ip: C64 = a.row(i).iter().zip(a.row(j)).map(|(p, q)| p * q.conj()).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip - C64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn noise_bounds_and_determinism() {
        let b = Measurements::new(vec![1.0; 100]).unwrap();
        assert_eq!(add_noise(&b, 0.0, &mut rng_from_seed(0)).unwrap(), b);
        let n1 = add_noise(&b, 1.0, &mut rng_from_seed(9)).unwrap();
        let n2 = add_noise(&b, 1.0, &mut rng_from_seed(9)).unwrap();
        assert_eq!(n1, n2);
        assert!(n1.as_slice().iter().all(|v| (v - 1.0).abs() <= 1.0));
        assert!(add_noise(&b, -1.0, &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(7, 0, 0);
        assert_ne!(a, derive_seed(7, 0, 1));
        assert_ne!(a, derive_seed(7, 1, 0));
        assert_eq!(a, derive_seed(7, 0, 0));
    }
}
