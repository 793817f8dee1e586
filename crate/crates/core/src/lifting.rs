//! Measurement ensemble and the lifted linear operator.
//!
//! Row `i` of the sensing matrix `A` is `a_i^H`, so a signal `x` produces
//! `b_i = |(A x)_i|^2 = a_i^H x x^H a_i = tr(Phi_i X)` with `Phi_i = a_i a_i^H`
//! and `X = x x^H`. The lifted operator `B(X) = {tr(Phi_i X)}` is linear in `X`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ComplexVector, HermitianMatrix, C64, ZERO};

/// Signal dimension at or below which `Phi_i` are cached by default.
pub const DEFAULT_PHI_CACHE_MAX_N: usize = 128;
/// Default column cap (`n^2`) for [`SensingSystem::b_as_matrix`].
pub const DEFAULT_B_MATRIX_MAX_COLS: usize = 4096;

/// How a system was generated; recorded for reproducibility.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub kind: String,
    pub seed: Option<u64>,
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
}

#[derive(Clone, Debug)]
pub struct SensingSystem {
    a: ComplexMatrix,
    phi: Option<Vec<HermitianMatrix>>,
    provenance: Option<Provenance>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
    a: ComplexMatrix,
}

impl Serialize for SensingSystem {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SystemRepr {
            provenance: self.provenance.clone(),
            a: self.a.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SensingSystem {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = SystemRepr::deserialize(d)?;
        let mut sys = SensingSystem::new(r.a).map_err(serde::de::Error::custom)?;
        sys.provenance = r.provenance;
        Ok(sys)
    }
}

impl SensingSystem {
    /// Wraps `a` (`N x n`, row `i` equal to `a_i^H`). `Phi_i` are cached
    /// when `n <= 128`.
    pub fn new(a: ComplexMatrix) -> Result<Self> {
        let cache = a.cols() <= DEFAULT_PHI_CACHE_MAX_N;
        Self::with_cache(a, cache)
    }

    pub fn with_cache(a: ComplexMatrix, cache_phi: bool) -> Result<Self> {
        if a.rows() == 0 || a.cols() == 0 {
            return Err(Error::InvalidArgument(format!(
                "sensing matrix must be nonempty, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        if let Some(i) = (0..a.rows()).find(|&i| a.row(i).iter().all(|z| *z == ZERO)) {
            return Err(Error::InvalidArgument(format!("sensing vector {i} is zero")));
        }
        let mut sys = Self {
            a,
            phi: None,
            provenance: None,
        };
        if cache_phi {
            let phi = (0..sys.num_measurements()).map(|i| sys.outer_row(i)).collect();
            sys.phi = Some(phi);
        }
        Ok(sys)
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.a
    }

    /// Signal dimension `n`.
    pub fn dim(&self) -> usize {
        self.a.cols()
    }

    /// Number of measurements `N`.
    pub fn num_measurements(&self) -> usize {
        self.a.rows()
    }

    pub fn caches_phi(&self) -> bool {
        self.phi.is_some()
    }

    /// Sensing vector `a_i` (the conjugate of row `i`).
    pub fn sensing_vector(&self, i: usize) -> ComplexVector {
        ComplexVector::from_vec(self.a.row(i).iter().map(|z| z.conj()).collect())
    }

    pub fn is_real(&self) -> bool {
        self.a.as_slice().iter().all(|z| z.im == 0.0)
    }

    fn outer_row(&self, i: usize) -> HermitianMatrix {
        let r = self.a.row(i);
        HermitianMatrix::from_upper_fn(self.dim(), |j, k| r[j].conj() * r[k])
    }

    /// `Phi_i = a_i a_i^H` (zero-based index).
    pub fn build_phi(&self, i: usize) -> Result<HermitianMatrix> {
        if i >= self.num_measurements() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.num_measurements(),
            });
        }
        Ok(match &self.phi {
            Some(phi) => phi[i].clone(),
            None => self.outer_row(i),
        })
    }

    /// `B(X)_i = tr(Phi_i X) = a_i^H X a_i`.
    pub fn apply_b(&self, x: &HermitianMatrix) -> Result<Vec<f64>> {
        self.check_dim(x.dim())?;
        let mut out = vec![0.0; self.num_measurements()];
        self.apply_b_into(x.as_slice(), &mut out);
        Ok(out)
    }

    /// `B^*(v) = sum_i v_i Phi_i`.
    pub fn adjoint_b(&self, v: &[f64]) -> Result<HermitianMatrix> {
        if v.len() != self.num_measurements() {
            return Err(Error::DimensionMismatch {
                expected: self.num_measurements(),
                got: v.len(),
            });
        }
        let n = self.dim();
        let mut out = vec![ZERO; n * n];
        self.adjoint_b_into(v, &mut out);
        Ok(HermitianMatrix::from_upper_fn(n, |i, j| out[i * n + j]))
    }

    /// Writes `B(X)` for a full Hermitian buffer `x` (row-major, `n x n`).
    pub(crate) fn apply_b_into(&self, x: &[C64], out: &mut [f64]) {
        let n = self.dim();
        if let Some(phi) = &self.phi {
            for (o, p) in out.iter_mut().zip(phi) {
                // tr(Phi X) = sum_jk conj(Phi_jk) X_jk for Hermitian Phi.
                *o = p
                    .as_slice()
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a.re * b.re + a.im * b.im)
                    .sum();
            }
            return;
        }
        for (i, o) in out.iter_mut().enumerate() {
            let r = self.a.row(i);
            let mut diag = 0.0;
            let mut off = ZERO;
            for j in 0..n {
                diag += r[j].norm_sqr() * x[j * n + j].re;
                let mut t = ZERO;
                for k in j + 1..n {
                    t += x[j * n + k] * r[k].conj();
                }
                off += r[j] * t;
            }
            *o = diag + 2.0 * off.re;
        }
    }

    /// Accumulates the upper triangle of `B^*(v)` into `out`; the lower
    /// triangle is left untouched.
    pub(crate) fn adjoint_b_into(&self, v: &[f64], out: &mut [C64]) {
        let n = self.dim();
        if let Some(phi) = &self.phi {
            for (&vi, p) in v.iter().zip(phi) {
                if vi == 0.0 {
                    continue;
                }
                let ps = p.as_slice();
                for j in 0..n {
                    for k in j..n {
                        out[j * n + k] += ps[j * n + k] * vi;
                    }
                }
            }
            return;
        }
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            let r = self.a.row(i);
            for j in 0..n {
                let c = r[j].conj() * vi;
                for k in j..n {
                    out[j * n + k] += c * r[k];
                }
            }
        }
    }

    /// Gram matrix of the lifted operator, `G_ij = tr(Phi_i Phi_j) = |a_i^H a_j|^2`.
    pub fn gram(&self) -> Vec<f64> {
        let m = self.num_measurements();
        let mut g = vec![0.0; m * m];
        for i in 0..m {
            for j in i..m {
                let ip: C64 = self
                    .a
                    .row(i)
                    .iter()
                    .zip(self.a.row(j))
                    .map(|(p, q)| p * q.conj())
                    .sum();
                g[i * m + j] = ip.norm_sqr();
                g[j * m + i] = ip.norm_sqr();
            }
        }
        g
    }

    /// Explicit `N x n^2` matrix of `B` acting on column-major `vec(X)`.
    pub fn b_as_matrix(&self) -> Result<ComplexMatrix> {
        self.b_as_matrix_capped(DEFAULT_B_MATRIX_MAX_COLS)
    }

    /// As [`Self::b_as_matrix`] with a custom cap on `n^2`.
    pub fn b_as_matrix_capped(&self, max_cols: usize) -> Result<ComplexMatrix> {
        let n = self.dim();
        let cols = n * n;
        if cols > max_cols {
            return Err(Error::CapExceeded {
                what: "n^2 columns",
                value: cols,
                cap: max_cols,
            });
        }
        let m = self.num_measurements();
        let mut data = vec![ZERO; m * cols];
        for i in 0..m {
            let r = self.a.row(i);
            let out = &mut data[i * cols..(i + 1) * cols];
            for c in 0..n {
                for rr in 0..n {
                    // conj(Phi_i[rr, c]) with Phi_i[rr, c] = conj(A_i,rr) A_i,c.
                    out[rr + c * n] = r[rr] * r[c].conj();
                }
            }
        }
        Ok(ComplexMatrix::from_vec(m, cols, data))
    }

    /// Squared magnitudes `|(A x)_i|^2`.
    pub fn measure(&self, x: &ComplexVector) -> Result<Measurements> {
        let y = self.a.mul_vec(x)?;
        Ok(Measurements::from_vec(
            y.as_slice().iter().map(|z| z.norm_sqr()).collect(),
        ))
    }

    /// Restriction to the coordinates in `support` (columns of `A`).
    pub fn restrict(&self, support: &[usize]) -> Result<SensingSystem> {
        let a = self.a.select_columns(support)?;
        let cache = self.phi.is_some();
        // Restricted vectors can vanish; keep them (they contribute nothing).
        Ok(SensingSystem {
            phi: cache.then(|| {
                (0..a.rows())
                    .map(|i| {
                        let r = a.row(i);
                        HermitianMatrix::from_upper_fn(support.len(), |j, k| r[j].conj() * r[k])
                    })
                    .collect()
            }),
            a,
            provenance: None,
        })
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }
}

/// Squared-magnitude observations `b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Measurements {
    values: Vec<f64>,
}

impl Measurements {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { values })
    }

    pub(crate) fn from_vec(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn check_len(&self, system: &SensingSystem) -> Result<()> {
        if self.len() != system.num_measurements() {
            return Err(Error::DimensionMismatch {
                expected: system.num_measurements(),
                got: self.len(),
            });
        }
        Ok(())
    }
}

/// Unitary DFT matrix, entry `(j, k) = exp(-2 pi i j k / n) / sqrt(n)`.
pub fn dft_matrix(n: usize) -> ComplexMatrix {
    let s = 1.0 / (n as f64).sqrt();
    ComplexMatrix::from_fn(n, n, |j, k| {
        let ang = -2.0 * PI * ((j * k) % n) as f64 / n as f64;
        C64::from_polar(s, ang)
    })
}

/// Inverse of [`dft_matrix`] (its conjugate transpose).
pub fn inverse_dft_matrix(n: usize) -> ComplexMatrix {
    let s = 1.0 / (n as f64).sqrt();
    ComplexMatrix::from_fn(n, n, |j, k| {
        let ang = 2.0 * PI * ((j * k) % n) as f64 / n as f64;
        C64::from_polar(s, ang)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn system_from_vectors(vectors: &[Vec<C64>]) -> SensingSystem {
        let n = vectors[0].len();
        let data = vectors.iter().flat_map(|v| v.iter().map(|z| z.conj())).collect();
        SensingSystem::new(ComplexMatrix::new(vectors.len(), n, data).unwrap()).unwrap()
    }

    #[test]
    fn phi_of_basis_vector() {
        let sys = system_from_vectors(&[vec![c(1.0, 0.0), ZERO, ZERO]]);
        let phi = sys.build_phi(0).unwrap();
        assert_eq!(phi, HermitianMatrix::from_real_diagonal(&[1.0, 0.0, 0.0]));
    }

    #[test]
    fn phi_of_one_i() {
        let sys = system_from_vectors(&[vec![c(1.0, 0.0), c(0.0, 1.0)]]);
        let phi = sys.build_phi(0).unwrap();
        assert_eq!(phi.get(0, 0), c(1.0, 0.0));
        assert_eq!(phi.get(0, 1), c(0.0, -1.0));
        assert_eq!(phi.get(1, 0), c(0.0, 1.0));
        assert_eq!(phi.get(1, 1), c(1.0, 0.0));
        assert!(matches!(
            sys.build_phi(1),
            Err(Error::IndexOutOfRange { index: 1, len: 1 })
        ));
    }

    #[test]
    fn apply_b_trivial_inputs() {
        let sys = system_from_vectors(&[vec![c(1.0, 2.0), c(0.5, 0.0)], vec![c(0.0, 1.0), c(-1.0, 1.0)]]);
        assert_eq!(sys.apply_b(&HermitianMatrix::zeros(2)).unwrap(), vec![0.0, 0.0]);
        let id = sys.apply_b(&HermitianMatrix::identity(2)).unwrap();
        assert!((id[0] - 5.25).abs() < 1e-14);
        assert!((id[1] - 3.0).abs() < 1e-14);
        assert!(sys.apply_b(&HermitianMatrix::zeros(3)).is_err());
        assert!(sys.adjoint_b(&[1.0]).is_err());
    }

    #[test]
    fn adjoint_of_unit_vector_is_phi() {
        let sys = system_from_vectors(&[vec![c(1.0, 2.0), c(0.5, 0.0)], vec![c(0.0, 1.0), c(-1.0, 1.0)]]);
        assert_eq!(sys.adjoint_b(&[1.0, 0.0]).unwrap(), sys.build_phi(0).unwrap());
        assert_eq!(sys.adjoint_b(&[0.0, 0.0]).unwrap(), HermitianMatrix::zeros(2));
    }

    #[test]
    fn b_matrix_small_cases() {
        let sys = system_from_vectors(&[vec![c(2.0, 0.0)], vec![c(0.0, 3.0)]]);
        let bm = sys.b_as_matrix().unwrap();
        assert_eq!(bm.as_slice(), &[c(4.0, 0.0), c(9.0, 0.0)]);

        let sys = system_from_vectors(&[vec![c(1.0, 0.0), ZERO], vec![c(1.0, 1.0), c(0.0, 2.0)]]);
        let bm = sys.b_as_matrix().unwrap();
        assert_eq!(bm.row(0), &[c(1.0, 0.0), ZERO, ZERO, ZERO]);
        assert!(sys.b_as_matrix_capped(3).is_err());
    }

    #[test]
    fn uncached_matches_cached() {
        let a = ComplexMatrix::from_fn(3, 3, |i, j| {
            c((i + 2 * j) as f64 * 0.3 - 0.4, (i * j) as f64 * 0.2 + 0.1)
        });
        let cached = SensingSystem::with_cache(a.clone(), true).unwrap();
        let plain = SensingSystem::with_cache(a, false).unwrap();
        let x = HermitianMatrix::from_upper_fn(3, |i, j| c(1.0 + i as f64, j as f64 - i as f64));
        let p = cached.apply_b(&x).unwrap();
        let q = plain.apply_b(&x).unwrap();
        for (u, v) in p.iter().zip(&q) {
            assert!((u - v).abs() < 1e-12);
        }
        let v = [0.5, -1.0, 2.0];
        assert!(
            cached
                .adjoint_b(&v)
                .unwrap()
                .distance(&plain.adjoint_b(&v).unwrap())
                < 1e-12
        );
    }

    #[test]
    fn rejects_zero_sensing_vector() {
        let a = ComplexMatrix::new(2, 2, vec![c(1.0, 0.0), ZERO, ZERO, ZERO]).unwrap();
        assert!(SensingSystem::new(a).is_err());
    }

    #[test]
    fn dft_is_unitary() {
        let f = dft_matrix(8);
        let p = f.matmul(&inverse_dft_matrix(8)).unwrap();
        let id = ComplexMatrix::identity(8);
        let err: f64 = p
            .as_slice()
            .iter()
            .zip(id.as_slice())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-14);
    }

    #[test]
    fn system_json_round_trip() {
        let sys = system_from_vectors(&[vec![c(1.0, 2.0), c(0.5, 0.0)]]).with_provenance(Provenance {
            kind: "gaussian".into(),
            seed: Some(3),
            n: 2,
            big_n: 1,
        });
        let json = serde_json::to_string(&sys).unwrap();
        assert!(json.contains("\"N\":1"));
        let back: SensingSystem = serde_json::from_str(&json).unwrap();
        assert_eq!(back.matrix(), sys.matrix());
        assert_eq!(back.provenance(), sys.provenance());
    }
}
