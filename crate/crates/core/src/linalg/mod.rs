//! Dense complex linear algebra: Hermitian eigendecomposition, cone
//! projections, entrywise shrinkage and rank-one extraction.

mod eigen;
pub mod io;
mod ops;
mod types;

pub use eigen::{eig_hermitian, eig_hermitian_from, EigenDecomposition};
pub(crate) use ops::{clip, psd_project_from, rank1_from_eig, shrink};
pub use ops::{
    extract_rank1, min_eigenvalue, normalize_phase, phase_aligned_error, psd_project, soft_threshold, RankOne,
};
pub(crate) use types::{gemm_adjoint_a, ZERO};
pub use types::{ComplexMatrix, ComplexVector, HermitianMatrix, C64, HERMITIAN_TOL};
