use matrixmultiply::CGemmOption;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

fn check_finite(entries: &[C64]) -> Result<()> {
    match entries
        .iter()
        .position(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

/// Dense complex column vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "crate::linalg::io::VectorRepr",
    into = "crate::linalg::io::VectorRepr"
)]
pub struct ComplexVector {
    entries: Vec<C64>,
}

impl ComplexVector {
    pub fn new(entries: Vec<C64>) -> Result<Self> {
        check_finite(&entries)?;
        Ok(Self { entries })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            entries: vec![ZERO; n],
        }
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    /// Unchecked constructor for values produced by finite arithmetic.
    pub(crate) fn from_vec(entries: Vec<C64>) -> Self {
        debug_assert!(check_finite(&entries).is_ok());
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.entries
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.entries
    }

    pub fn get(&self, i: usize) -> C64 {
        self.entries[i]
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Inner product `<self, other> = self^H other`.
    pub fn dot(&self, other: &ComplexVector) -> C64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, c: C64) -> ComplexVector {
        Self::from_vec(self.entries.iter().map(|z| z * c).collect())
    }

    pub fn sub(&self, other: &ComplexVector) -> ComplexVector {
        Self::from_vec(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.entries.iter().map(|z| z.norm()).collect()
    }

    /// Indices whose modulus exceeds `rel * max modulus`. Empty for the zero vector.
    pub fn support(&self, rel: f64) -> Vec<usize> {
        let max = self.norm_inf();
        if max == 0.0 {
            return Vec::new();
        }
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, z)| z.norm() > rel * max)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Dense complex matrix, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "crate::linalg::io::MatrixRepr",
    into = "crate::linalg::io::MatrixRepr"
)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        check_finite(&data)?;
        Ok(Self { rows, cols, data })
    }

    pub(crate) fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        debug_assert_eq!(rows * cols, data.len());
        debug_assert!(check_finite(&data).is_ok());
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_vec(rows, cols, vec![ZERO; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::from_vec(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> ComplexVector {
        ComplexVector::from_vec((0..self.rows).map(|i| self.get(i, j)).collect())
    }

    pub fn conj_transpose(&self) -> ComplexMatrix {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    /// Row-major data of the plain transpose.
    pub(crate) fn transpose_data(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.push(self.data[i * self.cols + j]);
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &ComplexVector) -> Result<ComplexVector> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: x.len(),
            });
        }
        Ok(ComplexVector::from_vec(
            (0..self.rows)
                .map(|i| self.row(i).iter().zip(x.as_slice()).map(|(a, b)| a * b).sum())
                .collect(),
        ))
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if other.rows != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = vec![ZERO; self.rows * other.cols];
        gemm(
            &self.data,
            &other.data,
            &mut out,
            self.rows,
            self.cols,
            other.cols,
        );
        Ok(Self::from_vec(self.rows, other.cols, out))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, c: C64) -> ComplexMatrix {
        Self::from_vec(self.rows, self.cols, self.data.iter().map(|z| z * c).collect())
    }

    /// Rows `indices` of `self`, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<ComplexMatrix> {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            if i >= self.rows {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    len: self.rows,
                });
            }
            data.extend_from_slice(self.row(i));
        }
        Ok(Self::from_vec(indices.len(), self.cols, data))
    }

    /// Columns `indices` of `self`, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> Result<ComplexMatrix> {
        if let Some(&bad) = indices.iter().find(|&&j| j >= self.cols) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: self.cols,
            });
        }
        Ok(Self::from_fn(self.rows, indices.len(), |i, j| {
            self.get(i, indices[j])
        }))
    }
}

/// `out (m x p) += a (m x k) * b (k x p)`, all row-major.
pub(crate) fn gemm(a: &[C64], b: &[C64], out: &mut [C64], m: usize, k: usize, p: usize) {
    zgemm(a, k as isize, 1, b, out, m, k, p);
}

/// `out += a^H b` where `a` is `k x m` row-major.
pub(crate) fn gemm_adjoint_a(a: &[C64], b: &[C64], out: &mut [C64], m: usize, k: usize, p: usize) {
    let conj: Vec<C64> = a[..m * k].iter().map(|z| z.conj()).collect();
    zgemm(&conj, 1, m as isize, b, out, m, k, p);
}

#[allow(clippy::too_many_arguments)]
fn zgemm(a: &[C64], rsa: isize, csa: isize, b: &[C64], out: &mut [C64], m: usize, k: usize, p: usize) {
    assert!(a.len() >= m * k && b.len() >= k * p && out.len() >= m * p);
    // SAFETY: `Complex<f64>` is `repr(C)` with layout `[f64; 2]`, and the
    // asserted lengths cover every index reached through the given strides.
    unsafe {
        matrixmultiply::zgemm(
            CGemmOption::Standard,
            CGemmOption::Standard,
            m,
            k,
            p,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            rsa,
            csa,
            b.as_ptr() as *const [f64; 2],
            p as isize,
            1,
            [1.0, 0.0],
            out.as_mut_ptr() as *mut [f64; 2],
            p as isize,
            1,
        );
    }
}

/// Absolute tolerance on `|h_ij - conj(h_ji)|` accepted by [`HermitianMatrix::new`],
/// relative to `max(1, max |h_ij|)`.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Square Hermitian matrix with full (not packed) row-major storage.
///
/// Construction symmetrizes: the stored matrix is exactly Hermitian and its
/// diagonal is exactly real.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "crate::linalg::io::MatrixRepr",
    into = "crate::linalg::io::MatrixRepr"
)]
pub struct HermitianMatrix {
    n: usize,
    data: Vec<C64>,
}

impl HermitianMatrix {
    pub fn new(n: usize, data: Vec<C64>) -> Result<Self> {
        if n * n != data.len() {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: data.len(),
            });
        }
        check_finite(&data)?;
        let scale = data.iter().map(|z| z.norm()).fold(1.0, f64::max);
        for i in 0..n {
            for j in i..n {
                let dev = (data[i * n + j] - data[j * n + i].conj()).norm();
                if dev > HERMITIAN_TOL * scale {
                    return Err(Error::NotHermitian {
                        row: i,
                        col: j,
                        deviation: dev,
                    });
                }
            }
        }
        let mut h = Self { n, data };
        h.symmetrize();
        Ok(h)
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_real_diagonal(&vec![1.0; n])
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut h = Self::zeros(n);
        for (i, &v) in d.iter().enumerate() {
            h.data[i * n + i] = C64::new(v, 0.0);
        }
        h
    }

    /// Builds from the upper triangle `f(i, j)`, `j >= i`; the lower triangle
    /// is mirrored and the diagonal's imaginary part dropped.
    pub fn from_upper_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = vec![ZERO; n * n];
        for i in 0..n {
            data[i * n + i] = C64::new(f(i, i).re, 0.0);
            for j in i + 1..n {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v.conj();
            }
        }
        Self { n, data }
    }

    /// Outer product `x x^H`.
    pub fn outer(x: &ComplexVector) -> Self {
        let xs = x.as_slice();
        Self::from_upper_fn(xs.len(), |i, j| xs[i] * xs[j].conj())
    }

    pub fn from_matrix(m: &ComplexMatrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::DimensionMismatch {
                expected: m.rows(),
                got: m.cols(),
            });
        }
        Self::new(m.rows(), m.as_slice().to_vec())
    }

    pub(crate) fn from_raw(n: usize, data: Vec<C64>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        Self { n, data }
    }

    pub(crate) fn symmetrize(&mut self) {
        let n = self.n;
        for i in 0..n {
            let d = self.data[i * n + i].re;
            self.data[i * n + i] = C64::new(d, 0.0);
            for j in i + 1..n {
                let v = (self.data[i * n + j] + self.data[j * n + i].conj()) * 0.5;
                self.data[i * n + j] = v;
                self.data[j * n + i] = v.conj();
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_vec(self.n, self.n, self.data.clone())
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.data[i * self.n + i].re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sqr().sqrt()
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Entrywise l1 norm, `sum |h_ij|`.
    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).sum()
    }

    /// Entrywise maximum modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Number of entries with modulus above `rel * max modulus`.
    pub fn count_nonzero(&self, rel: f64) -> usize {
        let max = self.max_abs();
        if max == 0.0 {
            return 0;
        }
        self.data.iter().filter(|z| z.norm() > rel * max).count()
    }

    /// Real inner product `Re tr(self^H other)`.
    pub fn inner(&self, other: &HermitianMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    /// `v^H H v` (real for Hermitian `H`).
    pub fn quadratic_form(&self, v: &[C64]) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let t: C64 = row.iter().zip(v).map(|(h, x)| h * x).sum();
            acc += (v[i].conj() * t).re;
        }
        acc
    }

    pub fn add(&self, other: &HermitianMatrix) -> HermitianMatrix {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &HermitianMatrix) -> HermitianMatrix {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> HermitianMatrix {
        Self::from_raw(self.n, self.data.iter().map(|z| z * c).collect())
    }

    pub(crate) fn zip_with(&self, other: &HermitianMatrix, f: impl Fn(C64, C64) -> C64) -> HermitianMatrix {
        debug_assert_eq!(self.n, other.n);
        Self::from_raw(
            self.n,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    /// Frobenius distance `||self - other||_2`.
    pub fn distance(&self, other: &HermitianMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Principal submatrix on `indices`.
    pub fn submatrix(&self, indices: &[usize]) -> HermitianMatrix {
        Self::from_upper_fn(indices.len(), |i, j| self.get(indices[i], indices[j]))
    }

    /// Embeds `self` into an `n x n` zero matrix at rows/columns `indices`.
    pub fn embed(&self, n: usize, indices: &[usize]) -> HermitianMatrix {
        debug_assert_eq!(indices.len(), self.n);
        let mut data = vec![ZERO; n * n];
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                data[i * n + j] = self.get(a, b);
            }
        }
        Self::from_raw(n, data)
    }
}
