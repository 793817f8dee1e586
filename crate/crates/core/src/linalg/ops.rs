use super::eigen::{eig_hermitian, eig_hermitian_from, EigenDecomposition};
use super::types::{ComplexMatrix, ComplexVector, HermitianMatrix, C64, ZERO};
use crate::error::Result;

/// Frobenius-nearest positive semidefinite matrix (negative eigenvalues clamped to zero).
pub fn psd_project(h: &HermitianMatrix) -> Result<HermitianMatrix> {
    let e = eig_hermitian(h)?;
    Ok(e.reconstruct_with(|l| l.max(0.0)))
}

/// PSD projection warm-started from a previous eigenbasis. Returns the
/// projection and the new decomposition.
pub(crate) fn psd_project_from(
    h: &HermitianMatrix,
    basis: Option<&ComplexMatrix>,
) -> Result<(HermitianMatrix, EigenDecomposition)> {
    let e = match basis {
        Some(b) => eig_hermitian_from(h, b)?,
        None => eig_hermitian(h)?,
    };
    Ok((e.reconstruct_with(|l| l.max(0.0)), e))
}

/// Complex soft-threshold `u -> u * max(0, 1 - t/|u|)` applied entrywise.
pub fn soft_threshold(h: &HermitianMatrix, t: f64) -> HermitianMatrix {
    assert!(t >= 0.0, "threshold must be nonnegative");
    HermitianMatrix::from_upper_fn(h.dim(), |i, j| shrink(h.get(i, j), t))
}

#[inline]
pub(crate) fn shrink(u: C64, t: f64) -> C64 {
    let m = u.norm();
    if m <= t {
        ZERO
    } else {
        u * (1.0 - t / m)
    }
}

/// Entrywise clip to modulus `<= t`, the complement of [`shrink`].
#[inline]
pub(crate) fn clip(u: C64, t: f64) -> C64 {
    let m = u.norm();
    if m <= t {
        u
    } else {
        u * (t / m)
    }
}

/// Rank-one factor of a PSD matrix.
#[derive(Clone, Debug)]
pub struct RankOne {
    /// `sqrt(lambda_1) v_1`, phase-normalized.
    pub signal: ComplexVector,
    /// `lambda_1 / sum_i max(lambda_i, 0)`; zero for the zero matrix.
    pub gap: f64,
}

/// Leading rank-one factor with the largest-modulus entry rotated to the
/// nonnegative real axis.
pub fn extract_rank1(x: &HermitianMatrix) -> Result<RankOne> {
    let e = eig_hermitian(x)?;
    Ok(rank1_from_eig(&e))
}

pub(crate) fn rank1_from_eig(e: &EigenDecomposition) -> RankOne {
    let n = e.dim();
    if n == 0 {
        return RankOne {
            signal: ComplexVector::zeros(0),
            gap: 0.0,
        };
    }
    let top = e.eigenvalues[0];
    let mass: f64 = e.eigenvalues.iter().map(|&l| l.max(0.0)).sum();
    if top <= 0.0 || mass == 0.0 {
        return RankOne {
            signal: ComplexVector::zeros(n),
            gap: 0.0,
        };
    }
    let scale = top.sqrt();
    let v: Vec<C64> = e.vector(0).into_iter().map(|z| z * scale).collect();
    RankOne {
        signal: normalize_phase(ComplexVector::from_vec(v)),
        gap: (top / mass).min(1.0),
    }
}

/// Rotates `x` by a unit scalar so its largest-modulus entry (first on ties)
/// is real and nonnegative.
pub fn normalize_phase(x: ComplexVector) -> ComplexVector {
    let mut best = 0;
    let mut best_mod = -1.0;
    for (i, z) in x.as_slice().iter().enumerate() {
        let m = z.norm();
        if m > best_mod {
            best = i;
            best_mod = m;
        }
    }
    if best_mod <= 0.0 {
        return x;
    }
    let pivot = x.get(best);
    let rot = pivot.conj() / best_mod;
    let mut v: Vec<C64> = x.into_vec().into_iter().map(|z| z * rot).collect();
    v[best] = C64::new(best_mod, 0.0);
    ComplexVector::from_vec(v)
}

/// Relative distance `min_c ||c x - y|| / ||y||` over unit scalars `c`.
pub fn phase_aligned_error(x: &ComplexVector, y: &ComplexVector) -> f64 {
    let ip = x.dot(y);
    let c = if ip.norm() > 0.0 {
        ip / ip.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    let diff = x.scale(c).sub(y).norm();
    let denom = y.norm();
    if denom == 0.0 {
        diff
    } else {
        diff / denom
    }
}

/// Smallest eigenvalue.
pub fn min_eigenvalue(h: &HermitianMatrix) -> Result<f64> {
    let e = eig_hermitian(h)?;
    Ok(e.eigenvalues.last().copied().unwrap_or(0.0))
}
