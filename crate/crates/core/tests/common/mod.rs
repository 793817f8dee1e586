#![allow(dead_code)]

use cprl::bench::instance::{complex_gaussian, rng_from_seed};
use cprl::linalg::{ComplexVector, HermitianMatrix, C64};
use nalgebra::{Complex, DMatrix};
use rand::Rng;

pub fn random_hermitian(n: usize, seed: u64) -> HermitianMatrix {
    let mut rng = rng_from_seed(seed);
    let scale: f64 = rng.gen_range(0.1..10.0);
    let mut upper = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in i..n {
            upper[i * n + j] = if i == j {
                C64::new(rng.gen_range(-1.0..1.0) * scale, 0.0)
            } else {
                complex_gaussian(&mut rng) * scale
            };
        }
    }
    HermitianMatrix::from_upper_fn(n, |i, j| upper[i * n + j])
}

pub fn random_vector(n: usize, seed: u64) -> ComplexVector {
    let mut rng = rng_from_seed(seed);
    ComplexVector::new((0..n).map(|_| complex_gaussian(&mut rng)).collect()).unwrap()
}

pub fn to_nalgebra(h: &HermitianMatrix) -> DMatrix<Complex<f64>> {
    let n = h.dim();
    DMatrix::from_fn(n, n, |i, j| {
        let z = h.get(i, j);
        Complex::new(z.re, z.im)
    })
}

/// Eigenvalues from nalgebra's Hermitian solver, sorted descending.
pub fn reference_eigenvalues(h: &HermitianMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = to_nalgebra(h)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    ev
}

/// PSD projection through nalgebra: clip negative eigenvalues to zero.
pub fn reference_psd_projection(h: &HermitianMatrix) -> DMatrix<Complex<f64>> {
    let e = to_nalgebra(h).symmetric_eigen();
    let clipped = DMatrix::from_diagonal(&e.eigenvalues.map(|l| Complex::new(l.max(0.0), 0.0)));
    &e.eigenvectors * clipped * e.eigenvectors.adjoint()
}

/// Real trace inner product `Re tr(A^H B)`.
pub fn frobenius_inner(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += (a.get(i, j).conj() * b.get(i, j)).re;
        }
    }
    s
}

pub fn max_abs_diff(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    let n = a.dim();
    let mut m = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            m = m.max((a.get(i, j) - b.get(i, j)).norm());
        }
    }
    m
}
