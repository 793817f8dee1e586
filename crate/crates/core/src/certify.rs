//! Recovery guarantees and ground-truth oracles.
//!
//! * [`mutual_coherence`] and [`coherence_recovery_bound`]: sparsity levels
//!   of the lifted solution certified by the coherence of `B`.
//! * [`estimate_rip`]: restricted isometry constants over sparse Hermitian
//!   matrices (`l2` or `l1` flavour).
//! * [`verify_dual_certificate`]: dual feasibility and duality gap of a solve.
//! * [`rip_error_bound`] and [`practical_bound_certifies`]: error bounds under
//!   a restricted isometry hypothesis.
//! * [`combinatorial_oracle`]: brute-force sign enumeration for real systems.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bench::instance::{derive_seed, rng_from_seed};
use crate::error::{invalid, Error, Result};
use crate::lifting::{Measurements, Provenance, SensingSystem};
use crate::linalg::{eig_hermitian, gemm_adjoint_a, min_eigenvalue, HermitianMatrix, C64, ZERO};

/// Relative modulus below which lifted entries count as zero in `||X||_0`.
pub const ZERO_NORM_REL: f64 = 1e-6;
/// Largest `n` for exhaustive support enumeration in [`estimate_rip`].
pub const RIP_EXHAUSTIVE_MAX_N: usize = 5;
/// Largest `k` for exhaustive support enumeration in [`estimate_rip`].
pub const RIP_EXHAUSTIVE_MAX_K: usize = 4;
/// Random entry draws per support pattern for the `l1` constant.
pub const RIP_DRAWS_PER_PATTERN: usize = 200;
pub const ORACLE_MAX_N: usize = 8;
pub const ORACLE_MAX_MEASUREMENTS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateKind {
    CoherenceBound,
    RipEstimate,
    Rip1Estimate,
    DualFeasible,
    OracleUnique,
}

/// Inputs needed to reproduce a certificate.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CertificateProvenance {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system: Option<Provenance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caps: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    /// Bound, estimated constant or duality gap, depending on `kind`.
    pub value: f64,
    pub holds: bool,
    pub detail: String,
    pub provenance: CertificateProvenance,
}

impl Certificate {
    /// For a coherence bound: are lifted matrices with `k^2` nonzeros certified?
    pub fn certifies_sparsity(&self, k: usize) -> bool {
        self.kind == CertificateKind::CoherenceBound && ((k * k) as f64) < self.value
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `||X||_0` with entries below `ZERO_NORM_REL` times the largest modulus treated as zero.
pub fn lifted_zero_norm(x: &HermitianMatrix) -> usize {
    x.count_nonzero(ZERO_NORM_REL)
}

/// Largest normalized inner product between distinct columns.
///
/// Zero columns are skipped with a warning.
pub fn mutual_coherence(m: &crate::linalg::ComplexMatrix) -> Result<f64> {
    let rows = m.rows();
    let mut keep = Vec::new();
    let mut norms = Vec::new();
    for j in 0..m.cols() {
        let nrm = (0..rows).map(|i| m.get(i, j).norm_sqr()).sum::<f64>().sqrt();
        if nrm > 0.0 {
            keep.push(j);
            norms.push(nrm);
        }
    }
    let skipped = m.cols() - keep.len();
    if skipped > 0 {
        log::warn!("mutual coherence: skipped {skipped} zero columns");
    }
    let cols = keep.len();
    if cols < 2 {
        return invalid(format!("mutual coherence needs 2 nonzero columns, found {cols}"));
    }
    let mut u = vec![ZERO; rows * cols];
    for i in 0..rows {
        for (c, (&j, &nrm)) in keep.iter().zip(&norms).enumerate() {
            u[i * cols + c] = m.get(i, j) / nrm;
        }
    }
    const BLOCK: usize = 128;
    let mut best = 0.0f64;
    let mut block = Vec::with_capacity(rows * BLOCK);
    let mut out = Vec::new();
    for start in (0..cols).step_by(BLOCK) {
        let width = BLOCK.min(cols - start);
        block.clear();
        for i in 0..rows {
            block.extend_from_slice(&u[i * cols + start..i * cols + start + width]);
        }
        out.clear();
        out.resize(width * cols, ZERO);
        gemm_adjoint_a(&block, &u, &mut out, width, rows, cols);
        for r in 0..width {
            for c in start + r + 1..cols {
                best = best.max(out[r * cols + c].norm());
            }
        }
    }
    Ok(best.min(1.0))
}

/// `0.5 (1 + 1/mu(B))`; `holds` when at least one nonzero is certified.
pub fn coherence_recovery_bound(system: &SensingSystem) -> Result<Certificate> {
    let mu = mutual_coherence(&system.b_as_matrix()?)?;
    let value = if mu > 0.0 {
        0.5 * (1.0 + 1.0 / mu)
    } else {
        f64::INFINITY
    };
    let largest = (1..)
        .take_while(|&k: &usize| ((k * k) as f64) < value)
        .take(system.dim())
        .last()
        .unwrap_or(0);
    Ok(Certificate {
        kind: CertificateKind::CoherenceBound,
        value,
        holds: value > 1.0,
        detail: format!("mu(B) = {mu:.6}; certifies k-sparse signals up to k = {largest}"),
        provenance: CertificateProvenance {
            system: system.provenance().cloned(),
            ..Default::default()
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RipMode {
    /// `| ||B(X)||_2^2 / ||X||_2^2 - 1 |`
    L2,
    /// `| ||B(X)||_1 / ||X||_1 - 1 |`
    L1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Every maximal support pattern.
    Exhaustive,
    /// This many random maximal patterns.
    Random(usize),
}

/// Real orthonormal basis of Hermitian matrices over one diagonal entry or
/// one off-diagonal pair, with `B` applied to each basis element.
struct Slots {
    /// `(row, col)`, `row == col` for diagonal slots.
    pos: Vec<(usize, usize)>,
    /// Column offsets into `images` (one for diagonal, two for pairs).
    first: Vec<usize>,
    /// `B(E_j)` for every real basis element, each of length `N`.
    images: Vec<Vec<f64>>,
    gram: Vec<f64>,
}

impl Slots {
    fn new(system: &SensingSystem) -> Self {
        let a = system.matrix();
        let (m, n) = (a.rows(), a.cols());
        let mut pos = Vec::new();
        let mut first = Vec::new();
        let mut images: Vec<Vec<f64>> = Vec::new();
        let s2 = std::f64::consts::SQRT_2;
        for i in 0..n {
            for j in i..n {
                pos.push((i, j));
                first.push(images.len());
                if i == j {
                    images.push((0..m).map(|r| a.get(r, i).norm_sqr()).collect());
                } else {
                    let z: Vec<C64> = (0..m).map(|r| a.get(r, i) * a.get(r, j).conj()).collect();
                    images.push(z.iter().map(|v| s2 * v.re).collect());
                    images.push(z.iter().map(|v| -s2 * v.im).collect());
                }
            }
        }
        let d = images.len();
        let mut gram = vec![0.0; d * d];
        for p in 0..d {
            for q in p..d {
                let v: f64 = images[p].iter().zip(&images[q]).map(|(x, y)| x * y).sum();
                gram[p * d + q] = v;
                gram[q * d + p] = v;
            }
        }
        Self {
            pos,
            first,
            images,
            gram,
        }
    }

    fn weight(&self, s: usize) -> usize {
        if self.pos[s].0 == self.pos[s].1 {
            1
        } else {
            2
        }
    }

    fn coords(&self, pattern: &[usize]) -> Vec<usize> {
        let mut out = Vec::new();
        for &s in pattern {
            out.push(self.first[s]);
            if self.weight(s) == 2 {
                out.push(self.first[s] + 1);
            }
        }
        out
    }

    /// Is no further slot addable within the budget?
    fn is_maximal(&self, pattern: &[usize], budget: usize) -> bool {
        let used: usize = pattern.iter().map(|&s| self.weight(s)).sum();
        (0..self.pos.len()).all(|s| pattern.contains(&s) || used + self.weight(s) > budget)
    }

    fn l2_deviation(&self, pattern: &[usize]) -> Result<f64> {
        let c = self.coords(pattern);
        let d = self.images.len();
        let sub = HermitianMatrix::from_upper_fn(c.len(), |p, q| C64::new(self.gram[c[p] * d + c[q]], 0.0));
        let e = eig_hermitian(&sub)?;
        let hi = e.eigenvalues.first().copied().unwrap_or(0.0);
        let lo = e.eigenvalues.last().copied().unwrap_or(0.0);
        Ok((hi - 1.0).max(1.0 - lo))
    }

    fn l1_deviation(&self, pattern: &[usize], draws: usize, rng: &mut impl Rng) -> f64 {
        let c = self.coords(pattern);
        let m = self.images[0].len();
        let mut worst = 0.0f64;
        for _ in 0..draws {
            let theta: Vec<f64> = c.iter().map(|_| rng.sample(StandardNormal)).collect();
            let mut bx = vec![0.0; m];
            for (t, &ci) in theta.iter().zip(&c) {
                for (o, v) in bx.iter_mut().zip(&self.images[ci]) {
                    *o += t * v;
                }
            }
            let mut l1x = 0.0;
            let mut k = 0;
            for &s in pattern {
                if self.weight(s) == 1 {
                    l1x += theta[k].abs();
                    k += 1;
                } else {
                    l1x += 2.0 * theta[k].hypot(theta[k + 1]) / std::f64::consts::SQRT_2;
                    k += 2;
                }
            }
            if l1x > 0.0 {
                let ratio = bx.iter().map(|v| v.abs()).sum::<f64>() / l1x;
                worst = worst.max((ratio - 1.0).abs());
            }
        }
        worst
    }
}

fn maximal_patterns(slots: &Slots, budget: usize) -> Vec<Vec<usize>> {
    fn walk(
        slots: &Slots,
        budget: usize,
        next: usize,
        used: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if next == slots.pos.len() {
            if !cur.is_empty() && slots.is_maximal(cur, budget) {
                out.push(cur.clone());
            }
            return;
        }
        let w = slots.weight(next);
        if used + w <= budget {
            cur.push(next);
            walk(slots, budget, next + 1, used + w, cur, out);
            cur.pop();
        }
        walk(slots, budget, next + 1, used, cur, out);
    }
    let mut out = Vec::new();
    walk(slots, budget, 0, 0, &mut Vec::new(), &mut out);
    out
}

fn random_pattern(slots: &Slots, budget: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..slots.pos.len()).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut used = 0;
    let mut out = Vec::new();
    for s in order {
        if used + slots.weight(s) <= budget {
            used += slots.weight(s);
            out.push(s);
        }
    }
    out.sort_unstable();
    out
}

fn pattern_seed(seed: u64, pattern: &[usize]) -> u64 {
    let key = pattern.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &s| {
        (h ^ s as u64).wrapping_mul(0x100_0000_01b3)
    });
    derive_seed(seed, key, pattern.len() as u64)
}

/// Restricted isometry constant over Hermitian matrices with at most `k` nonzeros.
///
/// In `L2` mode each pattern is evaluated exactly through the extreme
/// eigenvalues of the restricted Gram; `L1` draws `RIP_DRAWS_PER_PATTERN`
/// random matrices per pattern (one per pattern in `Random` mode). The value
/// is a lower bound on the constant unless the enumeration is exhaustive and
/// the mode is `L2`.
pub fn estimate_rip(
    system: &SensingSystem,
    k: usize,
    mode: RipMode,
    sampling: Sampling,
    seed: u64,
) -> Result<Certificate> {
    let n = system.dim();
    if k == 0 {
        return invalid("sparsity k must be positive");
    }
    let budget = k.min(n * n);
    let slots = Slots::new(system);
    let patterns = match sampling {
        Sampling::Exhaustive => {
            if n > RIP_EXHAUSTIVE_MAX_N {
                return Err(Error::CapExceeded {
                    what: "n for exhaustive RIP",
                    value: n,
                    cap: RIP_EXHAUSTIVE_MAX_N,
                });
            }
            if k > RIP_EXHAUSTIVE_MAX_K {
                return Err(Error::CapExceeded {
                    what: "k for exhaustive RIP",
                    value: k,
                    cap: RIP_EXHAUSTIVE_MAX_K,
                });
            }
            maximal_patterns(&slots, budget)
        }
        Sampling::Random(count) => {
            if count == 0 {
                return invalid("sample count must be positive");
            }
            let mut rng = rng_from_seed(seed);
            (0..count)
                .map(|_| random_pattern(&slots, budget, &mut rng))
                .collect()
        }
    };
    let draws = match sampling {
        Sampling::Exhaustive => RIP_DRAWS_PER_PATTERN,
        Sampling::Random(_) => 1,
    };
    let mut eps = 0.0f64;
    for p in &patterns {
        let dev = match mode {
            RipMode::L2 => slots.l2_deviation(p)?,
            RipMode::L1 => slots.l1_deviation(p, draws, &mut rng_from_seed(pattern_seed(seed, p))),
        };
        eps = eps.max(dev);
    }
    let exact = mode == RipMode::L2 && sampling == Sampling::Exhaustive;
    let samples = match mode {
        RipMode::L2 => patterns.len(),
        RipMode::L1 => patterns.len() * draws,
    };
    Ok(Certificate {
        kind: match mode {
            RipMode::L2 => CertificateKind::RipEstimate,
            RipMode::L1 => CertificateKind::Rip1Estimate,
        },
        value: eps,
        holds: eps < 1.0,
        detail: format!(
            "k = {k}; {} patterns, {samples} evaluations; {}",
            patterns.len(),
            if exact {
                "exact over all patterns"
            } else {
                "lower bound on the constant"
            }
        ),
        provenance: CertificateProvenance {
            system: system.provenance().cloned(),
            seed: Some(seed),
            samples: Some(samples),
            caps: Some(format!(
                "exhaustive: n <= {RIP_EXHAUSTIVE_MAX_N}, k <= {RIP_EXHAUSTIVE_MAX_K}"
            )),
        },
    })
}

/// Checks `|Z| <= lambda + tol` entrywise, `lambda_min(I + Z - B*(mu)) >= -tol`
/// and `|tr(X) + lambda ||X||_1 - mu^T b| <= tol (1 + |objective|)`.
///
/// `value` is the absolute duality gap; failures are reported in `detail`.
pub fn verify_dual_certificate(
    system: &SensingSystem,
    b: &Measurements,
    x: &HermitianMatrix,
    dual_mu: &[f64],
    dual_z: &HermitianMatrix,
    lambda: f64,
    tol: f64,
) -> Result<Certificate> {
    b.check_len(system)?;
    let n = system.dim();
    for d in [x.dim(), dual_z.dim()] {
        if d != n {
            return Err(Error::DimensionMismatch { expected: n, got: d });
        }
    }
    if dual_mu.len() != system.num_measurements() {
        return Err(Error::DimensionMismatch {
            expected: system.num_measurements(),
            got: dual_mu.len(),
        });
    }
    let z_max = dual_z.max_abs();
    let bound_ok = z_max <= lambda + tol;
    let y = HermitianMatrix::identity(n)
        .add(dual_z)
        .sub(&system.adjoint_b(dual_mu)?);
    let min_eig = min_eigenvalue(&y)?;
    let psd_ok = min_eig >= -tol;
    let objective = x.trace() + lambda * x.l1_norm();
    let dual_value: f64 = dual_mu.iter().zip(b.as_slice()).map(|(m, v)| m * v).sum();
    let gap = (objective - dual_value).abs();
    let gap_ok = gap <= tol * (1.0 + objective.abs());

    let mut detail = String::new();
    let mark = |ok: bool| if ok { "ok" } else { "FAILED" };
    let _ = write!(
        detail,
        "(a) max|Z| = {z_max:.3e} vs lambda = {lambda}: {}; ",
        mark(bound_ok)
    );
    let _ = write!(detail, "(b) min eig(Y) = {min_eig:.3e}: {}; ", mark(psd_ok));
    let _ = write!(
        detail,
        "(c) duality gap = {gap:.3e} (primal {objective:.6e}, dual {dual_value:.6e}): {}",
        mark(gap_ok)
    );
    Ok(Certificate {
        kind: CertificateKind::DualFeasible,
        value: gap,
        holds: bound_ok && psd_ok && gap_ok,
        detail,
        provenance: CertificateProvenance {
            system: system.provenance().cloned(),
            caps: Some(format!("tol = {tol}")),
            ..Default::default()
        },
    })
}

/// `sqrt(2) eps / (1 - eps)`, rejecting `eps >= 1/(1 + sqrt(2))`.
pub fn rip_rho(eps: f64) -> Result<f64> {
    let limit = 1.0 / (1.0 + std::f64::consts::SQRT_2);
    if !(eps.is_finite() && eps >= 0.0) {
        return invalid(format!("RIP constant must be >= 0, got {eps}"));
    }
    if eps >= limit {
        return invalid(format!(
            "RIP constant {eps} must be below 1/(1+sqrt 2) = {limit:.6}"
        ));
    }
    Ok(std::f64::consts::SQRT_2 * eps / (1.0 - eps))
}

/// Bound on `||X* - X~||_2`:
///
/// ```text
/// 2 / ((1 - rho) sqrt(k)) * l1_tail + (2 / (1 - rho) + 1 / sqrt(k)) * trace_gap / lambda
/// ```
pub fn rip_error_bound(eps: f64, k: usize, lambda: f64, l1_tail: f64, trace_gap: f64) -> Result<f64> {
    let rho = rip_rho(eps)?;
    if k == 0 {
        return invalid("k must be positive");
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return invalid(format!("lambda must be > 0, got {lambda}"));
    }
    let rk = (k as f64).sqrt();
    Ok(2.0 / ((1.0 - rho) * rk) * l1_tail + (2.0 / (1.0 - rho) + 1.0 / rk) * trace_gap / lambda)
}

/// Does `lambda > 2 sqrt(k) / (1 - rho) + 1` certify a rank-one solution as exact?
pub fn practical_bound_certifies(eps: f64, k: usize, lambda: f64, rank_one: bool) -> Result<bool> {
    let rho = rip_rho(eps)?;
    Ok(rank_one && lambda > 2.0 * (k as f64).sqrt() / (1.0 - rho) + 1.0)
}

/// Sparsest real signal consistent with the data, found by sign enumeration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub x: Vec<f64>,
    pub support: Vec<usize>,
    /// Only one solution of minimal sparsity, up to global sign.
    pub unique: bool,
    /// Number of distinct minimal-sparsity solutions found.
    pub solutions: usize,
}

impl OracleSolution {
    pub fn to_certificate(&self) -> Certificate {
        Certificate {
            kind: CertificateKind::OracleUnique,
            value: self.solutions as f64,
            holds: self.unique,
            detail: format!("support {:?}", self.support),
            provenance: CertificateProvenance {
                caps: Some(format!("n <= {ORACLE_MAX_N}, N <= {ORACLE_MAX_MEASUREMENTS}")),
                ..Default::default()
            },
        }
    }
}

/// Thin QR by modified Gram-Schmidt; `None` if the columns are dependent.
fn thin_qr(cols: &[Vec<f64>]) -> Option<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let s = cols.len();
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut r = vec![vec![0.0; s]; s];
    for (j, col) in cols.iter().enumerate() {
        let scale = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut v = col.clone();
        for (i, qi) in q.iter().enumerate() {
            let d: f64 = qi.iter().zip(&v).map(|(a, b)| a * b).sum();
            r[i][j] = d;
            for (vv, qq) in v.iter_mut().zip(qi) {
                *vv -= d * qq;
            }
        }
        let nrm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if nrm <= 1e-10 * scale.max(f64::MIN_POSITIVE) {
            return None;
        }
        r[j][j] = nrm;
        q.push(v.into_iter().map(|t| t / nrm).collect());
    }
    Some((q, r))
}

fn combinations(n: usize, s: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, s: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == s {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, s, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, s, 0, &mut Vec::new(), &mut out);
    out
}

/// Enumerates supports of size `1..=k_max` and sign patterns `alpha` with
/// `alpha_i sqrt(b_i) = a_i^T x`, visiting signs in Gray-code order with
/// incremental projections. A candidate is accepted when the least-squares
/// residual is at most `1e-8 (1 + ||b||)`.
pub fn combinatorial_oracle(
    system: &SensingSystem,
    b: &Measurements,
    k_max: usize,
) -> Result<OracleSolution> {
    b.check_len(system)?;
    if !system.is_real() {
        return invalid("combinatorial oracle needs a real sensing matrix");
    }
    let (m, n) = (system.num_measurements(), system.dim());
    if n > ORACLE_MAX_N {
        return Err(Error::CapExceeded {
            what: "n for the oracle",
            value: n,
            cap: ORACLE_MAX_N,
        });
    }
    if m > ORACLE_MAX_MEASUREMENTS {
        return Err(Error::CapExceeded {
            what: "N for the oracle",
            value: m,
            cap: ORACLE_MAX_MEASUREMENTS,
        });
    }
    if b.as_slice().iter().all(|&v| v == 0.0) {
        return Ok(OracleSolution {
            x: vec![0.0; n],
            support: Vec::new(),
            unique: true,
            solutions: 1,
        });
    }
    let accept = 1e-8 * (1.0 + b.norm());
    let roots: Vec<f64> = b.as_slice().iter().map(|v| v.max(0.0).sqrt()).collect();
    let active: Vec<usize> = (0..m).filter(|&i| roots[i] > 0.0).collect();
    let c_norm2: f64 = roots.iter().map(|v| v * v).sum();
    let screen = 1e-9 * c_norm2 + accept * accept;
    let a = system.matrix();
    let column = |j: usize| -> Vec<f64> { (0..m).map(|i| a.get(i, j).re).collect() };

    for s in 1..=k_max.min(n) {
        let mut found: Vec<(Vec<usize>, Vec<f64>)> = Vec::new();
        for support in combinations(n, s) {
            let cols: Vec<Vec<f64>> = support.iter().map(|&j| column(j)).collect();
            let Some((q, r)) = thin_qr(&cols) else { continue };
            let mut sign = vec![1.0f64; m];
            let mut proj: Vec<f64> = q
                .iter()
                .map(|qi| qi.iter().zip(&roots).map(|(u, v)| u * v).sum())
                .collect();
            let flips = active.len().saturating_sub(1);
            for step in 0u64..(1u64 << flips) {
                if step > 0 {
                    let i = active[1 + step.trailing_zeros() as usize];
                    for (p, qi) in proj.iter_mut().zip(&q) {
                        *p -= 2.0 * sign[i] * roots[i] * qi[i];
                    }
                    sign[i] = -sign[i];
                }
                let res2 = c_norm2 - proj.iter().map(|p| p * p).sum::<f64>();
                if res2 > screen {
                    continue;
                }
                let target: Vec<f64> = (0..m).map(|i| sign[i] * roots[i]).collect();
                let qt: Vec<f64> = q
                    .iter()
                    .map(|qi| qi.iter().zip(&target).map(|(u, v)| u * v).sum())
                    .collect();
                let mut coef = vec![0.0; s];
                for row in (0..s).rev() {
                    let tail: f64 = (row + 1..s).map(|c| r[row][c] * coef[c]).sum();
                    coef[row] = (qt[row] - tail) / r[row][row];
                }
                let resid = (0..m)
                    .map(|i| {
                        let fit: f64 = cols.iter().zip(&coef).map(|(col, c)| col[i] * c).sum();
                        (fit - target[i]).powi(2)
                    })
                    .sum::<f64>()
                    .sqrt();
                let peak = coef.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
                if resid <= accept && coef.iter().all(|v| v.abs() > 1e-9 * peak) {
                    let mut x = vec![0.0; n];
                    for (&j, &c) in support.iter().zip(&coef) {
                        x[j] = c;
                    }
                    found.push((support.clone(), x));
                }
            }
        }
        if let Some((support, x)) = found.first().cloned() {
            let first = support[0];
            let x = if x[first] < 0.0 {
                x.iter().map(|v| -v).collect()
            } else {
                x
            };
            return Ok(OracleSolution {
                x,
                support,
                unique: found.len() == 1,
                solutions: found.len(),
            });
        }
    }
    Err(Error::NoConsistentSolution)
}
