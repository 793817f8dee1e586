//! Compressive sensing baseline with access to the complex measurements.
//!
//! Solves `min ||x||_1` subject to `A x = y` by ADMM on the split `x = z`,
//! alternating the affine projection and entrywise shrinkage.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lifting::SensingSystem;
use crate::linalg::{eig_hermitian, shrink, ComplexVector, HermitianMatrix, C64, ZERO};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsConfig {
    pub rho: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for CsConfig {
    fn default() -> Self {
        Self {
            rho: 1.0,
            max_iters: 5000,
            tol: 1e-7,
        }
    }
}

impl CsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return invalid(format!("rho must be > 0, got {}", self.rho));
        }
        if !(self.tol > 0.0) || self.max_iters == 0 {
            return invalid("tol and max_iters must be positive");
        }
        Ok(())
    }
}

/// `v -> v - A^H (A A^H)^+ (A v - y)`.
struct AffineProjection<'a> {
    system: &'a SensingSystem,
    pinv: Vec<C64>,
}

impl<'a> AffineProjection<'a> {
    fn new(system: &'a SensingSystem) -> Result<Self> {
        let a = system.matrix();
        let m = a.rows();
        let aah = HermitianMatrix::from_upper_fn(m, |i, j| {
            a.row(i).iter().zip(a.row(j)).map(|(p, q)| p * q.conj()).sum()
        });
        let e = eig_hermitian(&aah)?;
        let top = e.eigenvalues.first().copied().unwrap_or(0.0);
        let inv: Vec<f64> = e
            .eigenvalues
            .iter()
            .map(|&l| if l > 1e-12 * top { 1.0 / l } else { 0.0 })
            .collect();
        let mut pinv = vec![ZERO; m * m];
        for (k, &w) in inv.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let v = e.vector(k);
            for i in 0..m {
                for j in 0..m {
                    pinv[i * m + j] += v[i] * v[j].conj() * w;
                }
            }
        }
        Ok(Self { system, pinv })
    }

    fn apply(&self, v: &[C64], y: &[C64]) -> Vec<C64> {
        let a = self.system.matrix();
        let (m, n) = (a.rows(), a.cols());
        let resid: Vec<C64> = (0..m)
            .map(|i| a.row(i).iter().zip(v).map(|(p, q)| p * q).sum::<C64>() - y[i])
            .collect();
        let w: Vec<C64> = (0..m)
            .map(|i| {
                self.pinv[i * m..(i + 1) * m]
                    .iter()
                    .zip(&resid)
                    .map(|(p, q)| p * q)
                    .sum()
            })
            .collect();
        let mut out = v.to_vec();
        for (i, wi) in w.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate().take(n) {
                *o -= a.get(i, j).conj() * wi;
            }
        }
        out
    }
}

/// Sparse estimate of `x` from `y = A x`.
pub fn solve_cs_baseline(
    system: &SensingSystem,
    y: &ComplexVector,
    config: &CsConfig,
) -> Result<ComplexVector> {
    config.validate()?;
    if y.len() != system.num_measurements() {
        return Err(Error::DimensionMismatch {
            expected: system.num_measurements(),
            got: y.len(),
        });
    }
    let n = system.dim();
    if y.norm() == 0.0 {
        return Ok(ComplexVector::zeros(n));
    }
    let proj = AffineProjection::new(system)?;
    let y = y.as_slice();
    let mut rho = config.rho;
    let mut z = vec![ZERO; n];
    let mut u = vec![ZERO; n];
    for iter in 1..=config.max_iters {
        let v: Vec<C64> = z.iter().zip(&u).map(|(a, b)| a - b).collect();
        let x = proj.apply(&v, y);
        let z_old = std::mem::replace(
            &mut z,
            x.iter().zip(&u).map(|(a, b)| shrink(a + b, 1.0 / rho)).collect(),
        );
        let mut r2 = 0.0;
        let mut s2 = 0.0;
        for i in 0..n {
            u[i] += x[i] - z[i];
            r2 += (x[i] - z[i]).norm_sqr();
            s2 += (z[i] - z_old[i]).norm_sqr();
        }
        let scale = x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
        let r = r2.sqrt() / scale;
        let s = rho * s2.sqrt() / scale;
        if r <= config.tol && s <= config.tol {
            log::debug!("cs baseline converged after {iter} iterations");
            break;
        }
        if iter % 10 == 0 {
            let factor = if r > 10.0 * s {
                2.0
            } else if s > 10.0 * r {
                0.5
            } else {
                1.0
            };
            if factor != 1.0 {
                rho *= factor;
                u.iter_mut().for_each(|c| *c /= factor);
            }
        }
    }
    ComplexVector::new(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::instance::{gen_ensemble, rng_from_seed, Ensemble};

    #[test]
    fn zero_measurements_give_zero() {
        let mut rng = rng_from_seed(3);
        let sys = gen_ensemble(Ensemble::Gaussian, 6, 12, &mut rng).unwrap();
        let x = solve_cs_baseline(&sys, &ComplexVector::zeros(6), &CsConfig::default()).unwrap();
        assert_eq!(x.norm(), 0.0);
    }

    #[test]
    fn recovers_single_atom() {
        let mut rng = rng_from_seed(4);
        let sys = gen_ensemble(Ensemble::Gaussian, 16, 32, &mut rng).unwrap();
        let mut e = vec![ZERO; 32];
        e[1] = C64::new(1.0, 0.0);
        let truth = ComplexVector::new(e).unwrap();
        let y = sys.matrix().mul_vec(&truth).unwrap();
        let x = solve_cs_baseline(&sys, &y, &CsConfig::default()).unwrap();
        assert_eq!(x.support(0.05), vec![1]);
        assert!(x.sub(&truth).norm() < 1e-4);
    }
}
