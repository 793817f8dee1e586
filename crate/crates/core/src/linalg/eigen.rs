//! Cyclic Jacobi eigensolver for dense Hermitian matrices.
//!
//! Each rotation zeroes one off-diagonal pair `(p, q)` with the unitary
//!
//! ```text
//! V = [ c            s e^{i phi} ]
//!     [ -s e^{-i phi}  c         ]     where h_pq = |h_pq| e^{i phi}
//! ```
//!
//! which reduces the complex 2x2 problem to the classical real one. Sweeps
//! stop once the off-diagonal Frobenius norm drops below `1e-12 * ||H||_F`.
//!
//! [`eig_hermitian_from`] starts from a caller-supplied orthonormal basis;
//! when that basis nearly diagonalizes `H` (successive iterates of a
//! splitting method), one or two sweeps suffice.

use super::types::{gemm, gemm_adjoint_a, ComplexMatrix, HermitianMatrix, C64, ZERO};
use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 100;
pub const CONVERGENCE_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    /// Sorted descending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `eigenvalues`.
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        let n = self.dim();
        (0..n).map(|i| self.eigenvectors.get(i, k)).collect()
    }

    /// `sum_k f(lambda_k) v_k v_k^H`, skipping terms where `f` returns zero.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let n = self.dim();
        let v = self.eigenvectors.as_slice();
        let mut out = vec![ZERO; n * n];
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vi = v[i * n + k] * w;
                for j in i..n {
                    out[i * n + j] += vi * v[j * n + k].conj();
                }
            }
        }
        HermitianMatrix::from_upper_fn(n, |i, j| out[i * n + j])
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.reconstruct_with(|l| l)
    }
}

pub fn eig_hermitian(h: &HermitianMatrix) -> Result<EigenDecomposition> {
    let n = h.dim();
    let mut a = h.as_slice().to_vec();
    let mut vt = ComplexMatrix::identity(n).as_slice().to_vec();
    jacobi(&mut a, &mut vt, n, h.frobenius_norm())?;
    Ok(finish(a, vt, n))
}

/// Eigendecomposition starting from the orthonormal columns of `basis`.
pub fn eig_hermitian_from(h: &HermitianMatrix, basis: &ComplexMatrix) -> Result<EigenDecomposition> {
    let n = h.dim();
    if basis.rows() != n || basis.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: basis.rows(),
        });
    }
    let vb = basis.as_slice();
    let mut hv = vec![ZERO; n * n];
    gemm(h.as_slice(), vb, &mut hv, n, n, n);
    let mut a = vec![ZERO; n * n];
    gemm_adjoint_a(vb, &hv, &mut a, n, n, n);
    let mut rotated = HermitianMatrix::from_raw(n, a);
    rotated.symmetrize();
    let mut a = rotated.as_slice().to_vec();
    let mut vt = basis.transpose_data();
    jacobi(&mut a, &mut vt, n, h.frobenius_norm())?;
    Ok(finish(a, vt, n))
}

fn off_norm(a: &[C64], n: usize) -> f64 {
    let mut s = 0.0;
    for p in 0..n {
        for q in p + 1..n {
            s += a[p * n + q].norm_sqr();
        }
    }
    (2.0 * s).sqrt()
}

/// Cyclic sweeps over `a` (full Hermitian storage); the accumulated
/// rotations are applied to the rows of `vt`.
fn jacobi(a: &mut [C64], vt: &mut [C64], n: usize, scale: f64) -> Result<()> {
    if n < 2 || scale == 0.0 {
        return Ok(());
    }
    let target = CONVERGENCE_TOL * scale;
    // Below this every skipped pair together stays under `target`.
    let skip = 0.1 * target / n as f64;
    for _ in 0..MAX_SWEEPS {
        let off = off_norm(a, n);
        if off <= target {
            return Ok(());
        }
        // Threshold strategy: postpone pairs that are small relative to the
        // current off-diagonal mass.
        let threshold = skip.max(0.25 * off / (n * n) as f64);
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q];
                let mag = apq.norm();
                if mag <= threshold {
                    continue;
                }
                rotate(a, vt, n, p, q, apq, mag);
            }
        }
    }
    let off = off_norm(a, n);
    if off <= target {
        Ok(())
    } else {
        Err(Error::EigenNoConvergence {
            sweeps: MAX_SWEEPS,
            off_norm: off,
        })
    }
}

/// Mutable views of rows `p < q` of a row-major `n`-column matrix.
#[inline]
fn two_rows(m: &mut [C64], n: usize, p: usize, q: usize) -> (&mut [C64], &mut [C64]) {
    let (head, tail) = m.split_at_mut(q * n);
    (&mut head[p * n..(p + 1) * n], &mut tail[..n])
}

#[inline]
fn rotate(a: &mut [C64], vt: &mut [C64], n: usize, p: usize, q: usize, apq: C64, mag: f64) {
    let app = a[p * n + p].re;
    let aqq = a[q * n + q].re;
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        let t = 1.0 / (theta.abs() + (theta * theta + 1.0).sqrt());
        if theta < 0.0 {
            -t
        } else {
            t
        }
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let phase = apq / mag;
    // Rotation entries V[p][q] = s e^{i phi}, V[q][p] = -s e^{-i phi}.
    let s_pq = phase * s;
    let s_qp = -phase.conj() * s;

    {
        // Rows p and q: new row p = c row_p + conj(s_qp) row_q, and
        // new row q = conj(s_pq) row_p + c row_q.
        let (rp, rq) = two_rows(a, n, p, q);
        let (cq, cp) = (s_qp.conj(), s_pq.conj());
        for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
            let (xp, yq) = (*x, *y);
            *x = xp * c + yq * cq;
            *y = xp * cp + yq * c;
        }
    }
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        a[k * n + p] = a[p * n + k].conj();
        a[k * n + q] = a[q * n + k].conj();
    }
    a[p * n + p] = C64::new(app - t * mag, 0.0);
    a[q * n + q] = C64::new(aqq + t * mag, 0.0);
    a[p * n + q] = ZERO;
    a[q * n + p] = ZERO;

    // Columns p, q of V are rows p, q of `vt`.
    let (vp, vq) = two_rows(vt, n, p, q);
    for (x, y) in vp.iter_mut().zip(vq.iter_mut()) {
        let (xp, yq) = (*x, *y);
        *x = xp * c + yq * s_qp;
        *y = xp * s_pq + yq * c;
    }
}

fn finish(a: Vec<C64>, vt: Vec<C64>, n: usize) -> EigenDecomposition {
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]).then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, c| vt[order[c] * n + r]);
    EigenDecomposition {
        eigenvalues,
        eigenvectors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::types::ComplexVector;

    fn reconstruction_error(h: &HermitianMatrix, e: &EigenDecomposition) -> f64 {
        e.reconstruct().distance(h)
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let e = eig_hermitian(&HermitianMatrix::identity(3)).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_input_is_sorted() {
        let h = HermitianMatrix::from_real_diagonal(&[-1.0, 3.0]);
        let e = eig_hermitian(&h).unwrap();
        assert_eq!(e.eigenvalues, vec![3.0, -1.0]);
        assert_eq!(e.vector(0), vec![ZERO, C64::new(1.0, 0.0)]);
        assert_eq!(e.vector(1), vec![C64::new(1.0, 0.0), ZERO]);
    }

    #[test]
    fn complex_two_by_two() {
        // [[2, i], [-i, 2]] has eigenvalues 3 and 1.
        let h = HermitianMatrix::new(
            2,
            vec![
                C64::new(2.0, 0.0),
                C64::new(0.0, 1.0),
                C64::new(0.0, -1.0),
                C64::new(2.0, 0.0),
            ],
        )
        .unwrap();
        let e = eig_hermitian(&h).unwrap();
        assert!((e.eigenvalues[0] - 3.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-14);
        assert!(reconstruction_error(&h, &e) < 1e-14);
    }

    #[test]
    fn warm_start_matches_cold() {
        let x =
            ComplexVector::new(vec![C64::new(1.0, 0.5), C64::new(-0.3, 0.2), C64::new(0.0, 1.0)]).unwrap();
        let h = HermitianMatrix::outer(&x).add(&HermitianMatrix::from_real_diagonal(&[0.1, -0.2, 0.3]));
        let cold = eig_hermitian(&h).unwrap();
        let warm = eig_hermitian_from(&h, &cold.eigenvectors).unwrap();
        for (a, b) in cold.eigenvalues.iter().zip(&warm.eigenvalues) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(reconstruction_error(&h, &warm) < 1e-12);
    }

    #[test]
    fn zero_matrix() {
        let e = eig_hermitian(&HermitianMatrix::zeros(4)).unwrap();
        assert!(e.eigenvalues.iter().all(|&l| l == 0.0));
    }
}
