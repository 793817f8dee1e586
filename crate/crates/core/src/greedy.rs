//! Greedy support expansion.
//!
//! Each round tries every unused coordinate `k`, solves the small program
//!
//! ```text
//! W_k = min_{X >= 0}  tr(X) + gamma sum_i (b_i - a_i^H X a_i)^2
//! ```
//!
//! over the sensing vectors restricted to the support plus `k`, and keeps the
//! coordinate with the smallest `W_k` (lowest index on ties). The loop stops
//! once `W` drops below `epsilon_stop`, once the data are explained (see
//! [`GreedyConfig::fit_tol`]), when `W` stops decreasing, or when the support
//! reaches `max_support`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lifting::{Measurements, SensingSystem};
use crate::linalg::{extract_rank1, HermitianMatrix};
use crate::solver::{self, SolveResult, SolveStatus, SolverConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreedyConfig {
    /// Weight of the squared data residual.
    pub gamma: f64,
    /// Stop once the round objective falls below this value.
    pub epsilon_stop: f64,
    /// Also stop once `||B(X) - b|| <= fit_tol ||b||`. Zero disables the test.
    pub fit_tol: f64,
    /// Largest support considered; `None` means the signal dimension.
    pub max_support: Option<usize>,
    /// Worker threads for candidate evaluation (1 = sequential).
    pub candidate_parallelism: usize,
    /// Settings of the restricted solves (`lambda`, `mu`, `epsilon` are ignored).
    pub solver: SolverConfig,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        Self {
            gamma: 10.0,
            epsilon_stop: 1e-3,
            fit_tol: 3e-2,
            max_support: None,
            candidate_parallelism: 1,
            solver: SolverConfig {
                max_iters: 2000,
                ..SolverConfig::default()
            },
        }
    }
}

impl GreedyConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return invalid(format!("gamma must be > 0, got {}", self.gamma));
        }
        if !(self.epsilon_stop.is_finite() && self.epsilon_stop > 0.0) {
            return invalid(format!("epsilon_stop must be > 0, got {}", self.epsilon_stop));
        }
        if !(self.fit_tol.is_finite() && self.fit_tol >= 0.0) {
            return invalid(format!("fit_tol must be >= 0, got {}", self.fit_tol));
        }
        if let Some(cap) = self.max_support {
            if cap == 0 || cap > n {
                return invalid(format!("max_support must lie in 1..={n}, got {cap}"));
            }
        }
        self.solver.validate()
    }

    fn restricted_config(&self) -> SolverConfig {
        SolverConfig {
            lambda: 0.0,
            mu: 2.0 * self.gamma,
            epsilon: 0.0,
            ..self.solver.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedyRound {
    pub round: usize,
    pub chosen_index: usize,
    #[serde(rename = "W")]
    pub w: f64,
    /// `||B(X) - b|| / ||b||` of the chosen restricted minimizer.
    pub misfit: f64,
    /// Accumulated support, ascending.
    pub support: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GreedyTrace {
    pub rounds: Vec<GreedyRound>,
}

#[derive(Serialize)]
struct RoundRow {
    round: usize,
    chosen_index: usize,
    #[serde(rename = "W")]
    w: f64,
    support_size: usize,
}

impl GreedyTrace {
    pub fn support(&self) -> &[usize] {
        self.rounds.last().map(|r| r.support.as_slice()).unwrap_or(&[])
    }

    /// CSV with columns `round,chosen_index,W,support_size`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rounds {
            out.serialize(RoundRow {
                round: r.round,
                chosen_index: r.chosen_index,
                w: r.w,
                support_size: r.support.len(),
            })?;
        }
        out.flush()?;
        Ok(())
    }
}

struct Restricted {
    result: SolveResult,
    w: f64,
    /// `||B(X) - b|| / ||b||`.
    misfit: f64,
}

fn restricted_solve(
    system: &SensingSystem,
    b: &Measurements,
    support: &[usize],
    config: &SolverConfig,
    gamma: f64,
    start: Option<HermitianMatrix>,
) -> Result<Restricted> {
    let sub = system.restrict(support)?;
    let result = solver::solve_penalized_from_point(&sub, b, config, start)?;
    let bx = sub.apply_b(&result.x)?;
    let r2: f64 = bx.iter().zip(b.as_slice()).map(|(p, q)| (p - q) * (p - q)).sum();
    let w = if result.converged() {
        result.x.trace() + gamma * r2
    } else {
        f64::INFINITY
    };
    let misfit = if b.norm() > 0.0 { r2.sqrt() / b.norm() } else { 0.0 };
    Ok(Restricted { result, w, misfit })
}

fn check_support(support: &[usize], n: usize) -> Result<()> {
    if support.is_empty() {
        return invalid("support must be nonempty");
    }
    for (k, &i) in support.iter().enumerate() {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, len: n });
        }
        if support[..k].contains(&i) {
            return invalid(format!("support index {i} repeated"));
        }
    }
    Ok(())
}

/// Solves the restricted penalized program on `support`; returns the
/// `|support| x |support|` minimizer and its objective (`+inf` when the
/// solve does not converge).
pub fn solve_restricted(
    system: &SensingSystem,
    b: &Measurements,
    support: &[usize],
    gamma: f64,
) -> Result<(HermitianMatrix, f64)> {
    let config = GreedyConfig {
        gamma,
        ..GreedyConfig::default()
    };
    solve_restricted_with(system, b, support, &config)
}

/// [`solve_restricted`] with explicit settings.
pub fn solve_restricted_with(
    system: &SensingSystem,
    b: &Measurements,
    support: &[usize],
    config: &GreedyConfig,
) -> Result<(HermitianMatrix, f64)> {
    config.validate(system.dim())?;
    b.check_len(system)?;
    check_support(support, system.dim())?;
    if let Some(cap) = config.max_support {
        if support.len() > cap {
            return Err(Error::CapExceeded {
                what: "support size",
                value: support.len(),
                cap,
            });
        }
    }
    let r = restricted_solve(
        system,
        b,
        support,
        &config.restricted_config(),
        config.gamma,
        None,
    )?;
    Ok((r.result.x, r.w))
}

/// Greedy compressive phase retrieval. The returned result carries the
/// restricted minimizer embedded into `n x n`.
pub fn gcprl(
    system: &SensingSystem,
    b: &Measurements,
    config: &GreedyConfig,
) -> Result<(SolveResult, GreedyTrace)> {
    let n = system.dim();
    config.validate(n)?;
    b.check_len(system)?;
    let cap = config.max_support.unwrap_or(n);
    let solver_cfg = config.restricted_config();
    let pool = if config.candidate_parallelism > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.candidate_parallelism)
                .build()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?,
        )
    } else {
        None
    };

    let mut support: Vec<usize> = Vec::new();
    let mut current: Option<Restricted> = None;
    let mut trace = GreedyTrace::default();
    let mut iterations = 0;
    let mut status = SolveStatus::MaxIters;

    while support.len() < cap {
        let start = current.as_ref().map(|c| {
            let k = support.len();
            c.result.x.embed(k + 1, &(0..k).collect::<Vec<_>>())
        });
        let candidates: Vec<usize> = (0..n).filter(|i| !support.contains(i)).collect();
        let evaluate = |&k: &usize| -> Result<(usize, Restricted)> {
            let mut trial = support.clone();
            trial.push(k);
            restricted_solve(system, b, &trial, &solver_cfg, config.gamma, start.clone()).map(|r| (k, r))
        };
        let evaluated: Vec<Result<(usize, Restricted)>> = match &pool {
            Some(pool) => pool.install(|| candidates.par_iter().map(evaluate).collect()),
            None => candidates.iter().map(evaluate).collect(),
        };
        let mut best: Option<(usize, Restricted)> = None;
        for item in evaluated {
            let (k, r) = item?;
            iterations += r.result.iterations;
            let better = match &best {
                None => true,
                Some((bk, br)) => r.w < br.w || (r.w == br.w && k < *bk),
            };
            if better {
                best = Some((k, r));
            }
        }
        let Some((p, chosen)) = best else { break };
        if !chosen.w.is_finite() {
            break;
        }
        if let Some(prev) = &current {
            if chosen.w >= prev.w {
                status = SolveStatus::Converged;
                break;
            }
        }
        support.push(p);
        let mut sorted = support.clone();
        sorted.sort_unstable();
        trace.rounds.push(GreedyRound {
            round: trace.rounds.len() + 1,
            chosen_index: p,
            w: chosen.w,
            misfit: chosen.misfit,
            support: sorted,
        });
        let done = chosen.w < config.epsilon_stop || chosen.misfit <= config.fit_tol;
        current = Some(chosen);
        if done {
            status = SolveStatus::Converged;
            break;
        }
    }

    let result = match current {
        Some(c) => {
            let x = c.result.x.embed(n, &support);
            let r1 = extract_rank1(&x)?;
            SolveResult {
                signal: r1.signal,
                gap: r1.gap,
                status,
                iterations,
                primal_residual: c.result.primal_residual,
                dual_residual: c.result.dual_residual,
                feasibility_residual: c.result.feasibility_residual,
                objective: x.trace(),
                lambda: 0.0,
                dual_mu: c.result.dual_mu,
                dual_z: HermitianMatrix::zeros(n),
                trace: Vec::new(),
                x,
            }
        }
        None => SolveResult {
            x: HermitianMatrix::zeros(n),
            signal: crate::linalg::ComplexVector::zeros(n),
            gap: 0.0,
            status: SolveStatus::MaxIters,
            iterations,
            primal_residual: f64::INFINITY,
            dual_residual: f64::INFINITY,
            feasibility_residual: b.norm(),
            objective: 0.0,
            lambda: 0.0,
            dual_mu: vec![0.0; b.len()],
            dual_z: HermitianMatrix::zeros(n),
            trace: Vec::new(),
        },
    };
    Ok((result, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::instance::{gen_ensemble, gen_sparse_signal, rng_from_seed, Ensemble};

    #[test]
    fn zero_data_stops_after_first_round() {
        let mut rng = rng_from_seed(1);
        let sys = gen_ensemble(Ensemble::Gaussian, 6, 5, &mut rng).unwrap();
        let b = Measurements::new(vec![0.0; 6]).unwrap();
        let (res, trace) = gcprl(&sys, &b, &GreedyConfig::default()).unwrap();
        assert_eq!(trace.rounds.len(), 1);
        assert_eq!(trace.rounds[0].w, 0.0);
        assert_eq!(res.signal.support(0.05), Vec::<usize>::new());
        assert_eq!(res.status, SolveStatus::Converged);
    }

    #[test]
    fn restricted_input_validation() {
        let mut rng = rng_from_seed(2);
        let sys = gen_ensemble(Ensemble::Gaussian, 6, 5, &mut rng).unwrap();
        let b = Measurements::new(vec![1.0; 6]).unwrap();
        assert!(solve_restricted(&sys, &b, &[], 10.0).is_err());
        assert!(solve_restricted(&sys, &b, &[7], 10.0).is_err());
        assert!(solve_restricted(&sys, &b, &[1, 1], 10.0).is_err());
        assert!(solve_restricted(&sys, &b, &[1], 0.0).is_err());
    }

    #[test]
    fn recovers_two_sparse_support() {
        let mut rng = rng_from_seed(3);
        let sys = gen_ensemble(Ensemble::Gaussian, 10, 20, &mut rng).unwrap();
        let x = gen_sparse_signal(20, 2, &mut rng).unwrap();
        let b = sys.measure(&x).unwrap();
        let (res, trace) = gcprl(&sys, &b, &GreedyConfig::default()).unwrap();
        let mut found = trace.support().to_vec();
        found.sort_unstable();
        assert_eq!(found, x.support(0.0));
        assert_eq!(res.signal.support(0.05), x.support(0.0));
        let ws: Vec<f64> = trace.rounds.iter().map(|r| r.w).collect();
        assert!(ws.windows(2).all(|w| w[1] < w[0]));
    }
}
