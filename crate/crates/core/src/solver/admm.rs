//! Splitting loop shared by every lifted program.
//!
//! `X` carries the trace and the data fit; it is copied into `P` (PSD cone)
//! and, when `lambda > 0`, into `S` (entrywise l1). The `X`-update is the
//! prox of `tr(X)` plus the data term, which reduces to
//!
//! ```text
//! X = Q - nu B^*((I + nu G)^{-1} (B(Q) - b))
//! ```
//!
//! where `G` is the `N x N` Gram of `B` and `Q` the averaged copies. For the
//! penalized form `nu` is fixed by the weights; for the residual ball it is
//! the root of a scalar secular equation, solved in the eigenbasis of `G`,
//! which is computed once per solve.

use crate::error::Result;
use crate::lifting::SensingSystem;
use crate::linalg::{
    clip, eig_hermitian, psd_project_from, rank1_from_eig, shrink, ComplexMatrix, ComplexVector,
    EigenDecomposition, HermitianMatrix, C64, ZERO,
};

use super::config::SolverConfig;
use super::{SolveResult, SolveStatus, TraceRow};

const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 1e6;
const RHO_UPDATE_EVERY: usize = 10;
const RHO_IMBALANCE: f64 = 5.0;
const FEASIBILITY_EVERY: usize = 10;
const STALL_WINDOW: usize = 100;
const STALL_FACTOR: f64 = 10.0;
/// Gram eigenvalues below this fraction of the largest are treated as zero.
const NULL_GRAM: f64 = 1e-12;

#[derive(Clone, Copy, Debug)]
pub(crate) enum DataFit {
    /// `||B(X) - b||_2 <= radius` holds exactly for every `X` iterate;
    /// `accept` is the radius the returned `P` must meet.
    Ball { radius: f64, accept: f64 },
    /// `(mu / 2) ||B(X) - b||_2^2` added to the objective.
    Penalty { mu: f64 },
}

/// Iterate of the splitting method, reusable as a warm start.
#[derive(Clone, Debug)]
pub struct SolverState {
    p: HermitianMatrix,
    u_p: HermitianMatrix,
    s: HermitianMatrix,
    u_s: HermitianMatrix,
    rho: f64,
    basis: Option<ComplexMatrix>,
}

impl SolverState {
    pub fn x(&self) -> &HermitianMatrix {
        &self.p
    }

    fn cold(n: usize, rho: f64) -> Self {
        Self {
            p: HermitianMatrix::zeros(n),
            u_p: HermitianMatrix::zeros(n),
            s: HermitianMatrix::zeros(n),
            u_s: HermitianMatrix::zeros(n),
            rho,
            basis: None,
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) enum WarmStart {
    /// Primal point only; multipliers start at zero.
    Point(HermitianMatrix),
    State(SolverState),
}

/// Eigendecomposition of the Gram `G`, columns stored row-major.
struct Gram {
    vecs: Vec<f64>,
    vals: Vec<f64>,
    m: usize,
}

impl Gram {
    fn new(system: &SensingSystem) -> Result<Self> {
        let m = system.num_measurements();
        let g = system.gram();
        let h = HermitianMatrix::from_upper_fn(m, |i, j| C64::new(g[i * m + j], 0.0));
        let e = eig_hermitian(&h)?;
        let top = e.eigenvalues[0].max(0.0);
        let vals = e
            .eigenvalues
            .iter()
            .map(|&l| if l > NULL_GRAM * top { l } else { 0.0 })
            .collect();
        let vecs = e.eigenvectors.as_slice().iter().map(|z| z.re).collect();
        Ok(Self { vecs, vals, m })
    }

    fn to_eigen(&self, r: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        for (i, ri) in r.iter().enumerate() {
            let row = &self.vecs[i * m..(i + 1) * m];
            for (o, v) in out.iter_mut().zip(row) {
                *o += v * ri;
            }
        }
        out
    }

    fn from_eigen(&self, c: &[f64]) -> Vec<f64> {
        let m = self.m;
        (0..m)
            .map(|i| {
                self.vecs[i * m..(i + 1) * m]
                    .iter()
                    .zip(c)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `||(I + nu G)^{-1} r||^2` from eigen-coordinates of `r`.
    fn shrunk_norm_sqr(&self, coords: &[f64], nu: f64) -> f64 {
        coords
            .iter()
            .zip(&self.vals)
            .map(|(c, g)| {
                let v = c / (1.0 + nu * g);
                v * v
            })
            .sum()
    }

    /// Part of the residual no multiplier can remove.
    fn null_norm_sqr(&self, coords: &[f64]) -> f64 {
        coords
            .iter()
            .zip(&self.vals)
            .filter(|(_, g)| **g == 0.0)
            .map(|(c, _)| c * c)
            .sum()
    }

    /// Smallest `nu >= 0` with `||(I + nu G)^{-1} r|| <= radius`, or `None`
    /// when the null-space part already exceeds the radius.
    fn ball_multiplier(&self, coords: &[f64], radius: f64) -> Option<f64> {
        let r2 = radius * radius;
        if self.shrunk_norm_sqr(coords, 0.0) <= r2 {
            return Some(0.0);
        }
        if self.null_norm_sqr(coords) >= r2 {
            return None;
        }
        let mut hi = 1.0 / self.vals[0].max(f64::MIN_POSITIVE);
        while self.shrunk_norm_sqr(coords, hi) > r2 {
            hi *= 4.0;
            if !hi.is_finite() {
                return None;
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = if lo == 0.0 { hi * 0.25 } else { (lo * hi).sqrt() };
            if self.shrunk_norm_sqr(coords, mid) > r2 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * hi {
                break;
            }
        }
        Some(hi)
    }

    fn shrink(&self, coords: &[f64], nu: f64) -> Vec<f64> {
        let c: Vec<f64> = coords
            .iter()
            .zip(&self.vals)
            .map(|(c, g)| c / (1.0 + nu * g))
            .collect();
        self.from_eigen(&c)
    }
}

fn norm_sqr(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn dist_sqr(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn herm_dist_sqr(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum()
}

/// Mirrors the upper triangle into the lower one and drops imaginary diagonal parts.
fn mirror_upper(buf: &mut [C64], n: usize) {
    for i in 0..n {
        buf[i * n + i].im = 0.0;
        for j in i + 1..n {
            buf[j * n + i] = buf[i * n + j].conj();
        }
    }
}

pub(crate) struct Outcome {
    pub result: SolveResult,
    pub state: SolverState,
}

/// Zero solution, optimal whenever `X = 0` satisfies the data constraint
/// (or the data vanish in the penalized form).
pub(crate) fn zero_outcome(system: &SensingSystem, b: &[f64], lambda: f64, rho: f64) -> Outcome {
    let n = system.dim();
    let zero = HermitianMatrix::zeros(n);
    let result = SolveResult {
        x: zero.clone(),
        signal: ComplexVector::zeros(n),
        gap: 0.0,
        status: SolveStatus::Converged,
        iterations: 0,
        primal_residual: 0.0,
        dual_residual: 0.0,
        feasibility_residual: norm_sqr(b).sqrt(),
        objective: 0.0,
        lambda,
        dual_mu: vec![0.0; system.num_measurements()],
        dual_z: zero,
        trace: Vec::new(),
    };
    Outcome {
        result,
        state: SolverState::cold(n, rho),
    }
}

pub(crate) fn run(
    system: &SensingSystem,
    b: &[f64],
    lambda: f64,
    fit: DataFit,
    config: &SolverConfig,
    warm: Option<WarmStart>,
) -> Result<Outcome> {
    let n = system.dim();
    let nm = system.num_measurements();
    let gram = Gram::new(system)?;
    let use_sparse = lambda > 0.0;
    let copies = if use_sparse { 2.0 } else { 1.0 };
    let alpha = config.relaxation;
    // Natural magnitude of X: ||b|| / ||B||.
    let x_scale = norm_sqr(b).sqrt() / gram.vals[0].sqrt().max(f64::MIN_POSITIVE);

    let mut state = match warm {
        Some(WarmStart::State(st)) if st.p.dim() == n => st,
        Some(WarmStart::Point(x)) if x.dim() == n => SolverState {
            s: x.clone(),
            p: x,
            ..SolverState::cold(n, config.rho_admm)
        },
        _ => SolverState::cold(n, config.rho_admm),
    };
    if !use_sparse {
        state.s = HermitianMatrix::zeros(n);
        state.u_s = HermitianMatrix::zeros(n);
    }

    let mut trace = Vec::new();
    let mut last_eig: Option<EigenDecomposition> = None;
    let mut status = SolveStatus::MaxIters;
    let mut iterations = 0;
    let mut r_rel = f64::INFINITY;
    let mut s_rel = f64::INFINITY;
    let mut feas = f64::INFINITY;
    let mut best_feas = f64::INFINITY;
    let mut best_feas_iter = 0usize;
    let mut best_primal = f64::INFINITY;
    let mut dual_mu = vec![0.0; nm];
    let mut bq = vec![0.0; nm];
    let dual_scale = (n as f64).sqrt();

    for iter in 1..=config.max_iters {
        iterations = iter;
        let rho = state.rho;

        // X-update: prox of tr + data fit at the averaged copies.
        let mut q = vec![ZERO; n * n];
        {
            let p = state.p.as_slice();
            let up = state.u_p.as_slice();
            for k in 0..n * n {
                q[k] = p[k] - up[k];
            }
            if use_sparse {
                let s = state.s.as_slice();
                let us = state.u_s.as_slice();
                for k in 0..n * n {
                    q[k] += s[k] - us[k];
                }
            }
            for z in q.iter_mut() {
                *z /= copies;
            }
            let shift = 1.0 / (rho * copies);
            for i in 0..n {
                q[i * n + i] -= shift;
            }
        }
        system.apply_b_into(&q, &mut bq);
        let resid: Vec<f64> = bq.iter().zip(b).map(|(a, c)| a - c).collect();
        let coords = gram.to_eigen(&resid);
        let nu = match fit {
            DataFit::Ball { radius, .. } => match gram.ball_multiplier(&coords, radius) {
                Some(nu) => nu,
                None => {
                    status = SolveStatus::Infeasible;
                    break;
                }
            },
            DataFit::Penalty { mu } => mu / (rho * copies),
        };
        let y = gram.shrink(&coords, nu);
        let mut xbuf = q;
        if nu > 0.0 {
            let step: Vec<f64> = y.iter().map(|v| -nu * v).collect();
            system.adjoint_b_into(&step, &mut xbuf);
        }
        mirror_upper(&mut xbuf, n);
        let x = HermitianMatrix::from_raw(n, xbuf);
        for (m, v) in dual_mu.iter_mut().zip(&y) {
            *m = -rho * copies * nu * v;
        }

        // PSD copy.
        let p_old = std::mem::replace(&mut state.p, HermitianMatrix::zeros(n));
        let t = x
            .zip_with(&p_old, |xv, pv| alpha * xv + (1.0 - alpha) * pv)
            .add(&state.u_p);
        let (p_new, eig) = psd_project_from(&t, state.basis.as_ref())?;
        state.u_p = t.sub(&p_new);
        state.p = p_new;
        state.basis = Some(eig.eigenvectors.clone());
        last_eig = Some(eig);

        // Sparse copy.
        let s_old = if use_sparse {
            let s_old = std::mem::replace(&mut state.s, HermitianMatrix::zeros(n));
            let t = x
                .zip_with(&s_old, |xv, sv| alpha * xv + (1.0 - alpha) * sv)
                .add(&state.u_s);
            let thr = lambda / rho;
            state.s = HermitianMatrix::from_upper_fn(n, |i, j| shrink(t.get(i, j), thr));
            state.u_s = HermitianMatrix::from_upper_fn(n, |i, j| clip(t.get(i, j), thr));
            Some(s_old)
        } else {
            None
        };

        // Residuals.
        let x2 = x.frobenius_norm_sqr();
        let mut r2 = herm_dist_sqr(&x, &state.p);
        let mut dz2 = herm_dist_sqr(&state.p, &p_old);
        let mut z2 = state.p.frobenius_norm_sqr();
        if let Some(s_old) = &s_old {
            r2 += herm_dist_sqr(&x, &state.s);
            dz2 += herm_dist_sqr(&state.s, s_old);
            z2 += state.s.frobenius_norm_sqr();
        }
        let pri_scale = (copies * x2).sqrt().max(z2.sqrt()).max(x_scale);
        r_rel = if pri_scale > 0.0 {
            r2.sqrt() / pri_scale
        } else {
            r2.sqrt()
        };
        s_rel = rho * dz2.sqrt() / dual_scale;

        let residual_ok = r_rel <= config.tol_primal && s_rel <= config.tol_dual;
        let ball = matches!(fit, DataFit::Ball { .. });
        if ball && (residual_ok || iter % FEASIBILITY_EVERY == 0) {
            system.apply_b_into(state.p.as_slice(), &mut bq);
            feas = dist_sqr(&bq, b).sqrt();
            // Progress on either the feasibility or the consensus residual resets the stall clock.
            if feas < 0.99 * best_feas || r_rel < 0.99 * best_primal {
                best_feas = best_feas.min(feas);
                best_primal = best_primal.min(r_rel);
                best_feas_iter = iter;
            }
        }

        if config.record_trace {
            let e = last_eig.as_ref().unwrap();
            let top = e.eigenvalues[0].max(0.0);
            let mass: f64 = e.eigenvalues.iter().map(|l| l.max(0.0)).sum();
            trace.push(TraceRow {
                iter,
                primal_res: r_rel,
                dual_res: s_rel,
                objective: state.p.trace() + lambda * state.p.l1_norm(),
                gap: if mass > 0.0 { top / mass } else { 0.0 },
            });
        }
        if iter % 100 == 0 {
            log::trace!(
                "iter {iter}: primal {r_rel:.3e} dual {s_rel:.3e} rho {:.3e} feas {feas:.3e}",
                state.rho
            );
        }

        if residual_ok {
            match fit {
                DataFit::Ball { accept, .. } if feas > accept => {}
                _ => {
                    status = SolveStatus::Converged;
                    break;
                }
            }
        }
        if let DataFit::Ball { accept, .. } = fit {
            // Stalled residuals while the copies no longer move.
            if feas > STALL_FACTOR * accept
                && iter >= best_feas_iter + STALL_WINDOW
                && s_rel <= STALL_FACTOR * config.tol_dual
            {
                status = SolveStatus::Infeasible;
                break;
            }
        }

        if config.adaptive_rho && iter % RHO_UPDATE_EVERY == 0 {
            let factor = if r_rel > RHO_IMBALANCE * s_rel && state.rho < RHO_MAX {
                2.0
            } else if s_rel > RHO_IMBALANCE * r_rel && state.rho > RHO_MIN {
                0.5
            } else {
                1.0
            };
            if factor != 1.0 {
                state.rho *= factor;
                state.u_p = state.u_p.scale(1.0 / factor);
                state.u_s = state.u_s.scale(1.0 / factor);
            }
        }
    }

    system.apply_b_into(state.p.as_slice(), &mut bq);
    feas = dist_sqr(&bq, b).sqrt();

    let (signal, gap) = match &last_eig {
        Some(eig) => {
            let clamped = EigenDecomposition {
                eigenvalues: eig.eigenvalues.iter().map(|l| l.max(0.0)).collect(),
                eigenvectors: eig.eigenvectors.clone(),
            };
            let r1 = rank1_from_eig(&clamped);
            (r1.signal, r1.gap)
        }
        None => (ComplexVector::zeros(n), 0.0),
    };

    // Multipliers: Y = -rho U_P >= 0 and Z = rho U_S with |Z_ij| <= lambda
    // satisfy I + Z - B^*(mu) = Y at a fixed point.
    let rho = state.rho;
    let dual_z = if use_sparse {
        HermitianMatrix::from_upper_fn(n, |i, j| clip(state.u_s.get(i, j) * rho, lambda))
    } else {
        HermitianMatrix::zeros(n)
    };

    let objective = state.p.trace() + lambda * state.p.l1_norm();
    let result = SolveResult {
        x: state.p.clone(),
        signal,
        gap,
        status,
        iterations,
        primal_residual: r_rel,
        dual_residual: s_rel,
        feasibility_residual: feas,
        objective,
        lambda,
        dual_mu,
        dual_z,
        trace,
    };
    Ok(Outcome { result, state })
}
