//! Splitting solver for the lifted programs.
//!
//! All entry points share one loop (see [`SolverState`] for warm starts):
//!
//! * [`solve_cprl`]: `min tr(X) + lambda ||X||_1` with `||B(X) - b|| <= eps`.
//! * [`solve_phaselift`]: the same with `lambda = 0`.
//! * [`solve_cprl_noisy`]: residual ball when `epsilon > 0`, otherwise the
//!   penalized form (see [`solve_penalized`]).
//! * [`warm_start_solve`]: a decreasing `lambda` schedule, stopping at the
//!   first numerically rank-one iterate.

mod admm;
mod config;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use admm::SolverState;
pub use config::SolverConfig;

use crate::error::{invalid, Result};
use crate::lifting::{Measurements, SensingSystem};
use crate::linalg::{ComplexVector, HermitianMatrix};
use admm::{DataFit, WarmStart};

pub(crate) use admm::WarmStart as Warm;

/// Absolute part of the minimum residual radius.
const MIN_RADIUS_SCALE: f64 = 1e-6;
pub const DEFAULT_SCHEDULE_LEN: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Converged,
    MaxIters,
    Infeasible,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub primal_res: f64,
    pub dual_res: f64,
    pub objective: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveResult {
    #[serde(rename = "X")]
    pub x: HermitianMatrix,
    /// Leading eigenvector scaled by the root of its eigenvalue.
    pub signal: ComplexVector,
    /// Share of the eigenvalue mass carried by the top eigenvalue.
    pub gap: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// `||B(X) - b||_2`.
    pub feasibility_residual: f64,
    /// `tr(X) + lambda ||X||_1`.
    pub objective: f64,
    pub lambda: f64,
    pub dual_mu: Vec<f64>,
    #[serde(rename = "dual_Z")]
    pub dual_z: HermitianMatrix,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceRow>,
}

impl SolveResult {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    /// Writes the iteration trace as CSV (`iter,primal_res,dual_res,objective,gap`).
    pub fn write_trace_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for row in &self.trace {
            out.serialize(row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Residual radius actually enforced: never below `1e-6 (1 + ||b||)`.
pub fn effective_epsilon(epsilon: f64, b: &Measurements) -> f64 {
    epsilon.max(MIN_RADIUS_SCALE * (1.0 + b.norm()))
}

fn ball(epsilon: f64, b: &Measurements) -> DataFit {
    let accept = effective_epsilon(epsilon, b);
    DataFit::Ball {
        radius: accept - 0.5 * MIN_RADIUS_SCALE * (1.0 + b.norm()),
        accept,
    }
}

fn prepare(system: &SensingSystem, b: &Measurements, config: &SolverConfig) -> Result<()> {
    config.validate()?;
    b.check_len(system)
}

fn dispatch(
    system: &SensingSystem,
    b: &Measurements,
    lambda: f64,
    fit: DataFit,
    config: &SolverConfig,
    warm: Option<WarmStart>,
) -> Result<(SolveResult, SolverState)> {
    let trivial = match fit {
        DataFit::Ball { accept, .. } => b.norm() <= accept,
        DataFit::Penalty { .. } => b.norm() == 0.0,
    };
    let out = if trivial {
        admm::zero_outcome(system, b.as_slice(), lambda, config.rho_admm)
    } else {
        admm::run(system, b.as_slice(), lambda, fit, config, warm)?
    };
    Ok((out.result, out.state))
}

/// CPRL with the equality constraints relaxed to a residual ball of radius
/// [`effective_epsilon`].
pub fn solve_cprl(system: &SensingSystem, b: &Measurements, config: &SolverConfig) -> Result<SolveResult> {
    prepare(system, b, config)?;
    let fit = ball(config.epsilon, b);
    Ok(dispatch(system, b, config.lambda, fit, config, None)?.0)
}

/// Trace minimization without the sparsity term.
pub fn solve_phaselift(
    system: &SensingSystem,
    b: &Measurements,
    config: &SolverConfig,
) -> Result<SolveResult> {
    let cfg = SolverConfig {
        lambda: 0.0,
        ..config.clone()
    };
    solve_cprl(system, b, &cfg)
}

/// `min tr(X) + lambda ||X||_1 + (mu/2) ||B(X) - b||^2` over the PSD cone.
pub fn solve_penalized(
    system: &SensingSystem,
    b: &Measurements,
    config: &SolverConfig,
) -> Result<SolveResult> {
    prepare(system, b, config)?;
    let fit = DataFit::Penalty { mu: config.mu };
    Ok(dispatch(system, b, config.lambda, fit, config, None)?.0)
}

/// Noisy CPRL: the residual ball when `epsilon > 0`, the penalized form otherwise.
pub fn solve_cprl_noisy(
    system: &SensingSystem,
    b: &Measurements,
    config: &SolverConfig,
) -> Result<SolveResult> {
    Ok(solve_cprl_noisy_from(system, b, config, None)?.0)
}

/// [`solve_cprl_noisy`] continuing from a previous state.
pub fn solve_cprl_noisy_from(
    system: &SensingSystem,
    b: &Measurements,
    config: &SolverConfig,
    warm: Option<SolverState>,
) -> Result<(SolveResult, SolverState)> {
    prepare(system, b, config)?;
    let fit = noisy_fit(b, config);
    dispatch(system, b, config.lambda, fit, config, warm.map(WarmStart::State))
}

fn noisy_fit(b: &Measurements, config: &SolverConfig) -> DataFit {
    if config.epsilon > 0.0 {
        ball(config.epsilon, b)
    } else {
        DataFit::Penalty { mu: config.mu }
    }
}

/// Penalized solve started from a primal point (duals reset).
pub(crate) fn solve_penalized_from_point(
    system: &SensingSystem,
    b: &Measurements,
    config: &SolverConfig,
    start: Option<HermitianMatrix>,
) -> Result<SolveResult> {
    prepare(system, b, config)?;
    let fit = DataFit::Penalty { mu: config.mu };
    Ok(dispatch(system, b, config.lambda, fit, config, start.map(Warm::Point))?.0)
}

/// `||B^*(b)||_inf` halved [`DEFAULT_SCHEDULE_LEN`] times (starting at 1 if it vanishes).
pub fn default_lambda_schedule(system: &SensingSystem, b: &Measurements) -> Result<Vec<f64>> {
    b.check_len(system)?;
    let top = system.adjoint_b(b.as_slice())?.max_abs();
    let start = if top > 0.0 { top } else { 1.0 };
    Ok((0..DEFAULT_SCHEDULE_LEN)
        .map(|k| start * 0.5f64.powi(k as i32))
        .collect())
}

/// Runs [`solve_cprl_noisy`] along a strictly decreasing `lambda` schedule,
/// each solve continuing from the previous one. Returns the first result
/// whose gap reaches `rank1_gap_threshold`; otherwise the last result,
/// flagged [`SolveStatus::MaxIters`].
pub fn warm_start_solve(
    system: &SensingSystem,
    b: &Measurements,
    config: &SolverConfig,
    lambda_schedule: &[f64],
) -> Result<SolveResult> {
    if lambda_schedule.is_empty() {
        return invalid("lambda schedule is empty");
    }
    if lambda_schedule.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return invalid("lambda schedule must contain positive finite values");
    }
    if lambda_schedule.windows(2).any(|w| w[1] >= w[0]) {
        return invalid("lambda schedule must be strictly decreasing");
    }
    let mut state = None;
    let mut last = None;
    for &lambda in lambda_schedule {
        let cfg = SolverConfig {
            lambda,
            ..config.clone()
        };
        let (res, st) = solve_cprl_noisy_from(system, b, &cfg, state)?;
        if res.gap >= config.rank1_gap_threshold {
            return Ok(res);
        }
        let zero = res.x.max_abs() == 0.0 && b.norm() == 0.0;
        state = Some(st);
        last = Some(res);
        if zero {
            break;
        }
    }
    let mut res = last.expect("schedule is nonempty");
    res.status = SolveStatus::MaxIters;
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::instance::{gen_ensemble, gen_sparse_signal, rng_from_seed, Ensemble};
    use crate::linalg::psd_project;

    fn instance(seed: u64, n: usize, m: usize, k: usize) -> (SensingSystem, ComplexVector, Measurements) {
        let mut rng = rng_from_seed(seed);
        let sys = gen_ensemble(Ensemble::Gaussian, m, n, &mut rng).unwrap();
        let x = gen_sparse_signal(n, k, &mut rng).unwrap();
        let b = sys.measure(&x).unwrap();
        (sys, x, b)
    }

    #[test]
    fn zero_data_gives_zero() {
        let (sys, _, b) = instance(1, 6, 8, 1);
        let zero = Measurements::new(vec![0.0; b.len()]).unwrap();
        let cfg = SolverConfig::default();
        for r in [
            solve_cprl(&sys, &zero, &cfg).unwrap(),
            solve_phaselift(&sys, &zero, &cfg).unwrap(),
            solve_penalized(&sys, &zero, &cfg).unwrap(),
        ] {
            assert_eq!(r.x.max_abs(), 0.0);
            assert_eq!(r.objective, 0.0);
            assert!(r.dual_mu.iter().all(|&m| m == 0.0));
            assert_eq!(r.dual_z.max_abs(), 0.0);
        }
    }

    #[test]
    fn huge_epsilon_gives_zero() {
        let (sys, _, b) = instance(2, 6, 8, 1);
        let cfg = SolverConfig {
            epsilon: 2.0 * b.norm(),
            ..Default::default()
        };
        let r = solve_cprl_noisy(&sys, &b, &cfg).unwrap();
        assert_eq!(r.x.max_abs(), 0.0);
        assert_eq!(r.status, SolveStatus::Converged);
    }

    #[test]
    fn recovers_small_sparse_signal() {
        let (sys, x, b) = instance(3, 8, 20, 1);
        let cfg = SolverConfig {
            lambda: 0.5,
            ..Default::default()
        };
        let r = solve_cprl(&sys, &b, &cfg).unwrap();
        assert_eq!(r.status, SolveStatus::Converged, "{r:?}");
        assert!(r.gap > 0.99);
        assert!(crate::linalg::phase_aligned_error(&r.signal, &x) < 1e-3);
        assert!(r.feasibility_residual <= effective_epsilon(0.0, &b));
        let proj = psd_project(&r.x).unwrap();
        assert!(r.x.distance(&proj) <= 1e-8);
        let obj = r.x.trace() + cfg.lambda * r.x.l1_norm();
        assert!((obj - r.objective).abs() <= 1e-10);
    }

    #[test]
    fn phaselift_matches_cprl_with_zero_lambda() {
        let (sys, _, b) = instance(4, 5, 12, 2);
        let cfg = SolverConfig {
            lambda: 0.0,
            ..Default::default()
        };
        let a = solve_cprl(&sys, &b, &cfg).unwrap();
        let p = solve_phaselift(
            &sys,
            &b,
            &SolverConfig {
                lambda: 3.0,
                ..cfg.clone()
            },
        )
        .unwrap();
        assert_eq!(a.x, p.x);
        assert_eq!(a.iterations, p.iterations);
        assert_eq!(p.dual_z.max_abs(), 0.0);
    }

    #[test]
    fn negative_data_is_infeasible() {
        let (sys, _, b) = instance(8, 5, 10, 1);
        let neg = Measurements::new(b.as_slice().iter().map(|v| -v - 1.0).collect()).unwrap();
        let r = solve_cprl(&sys, &neg, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible, "{r:?}");
    }

    #[test]
    fn schedule_validation() {
        let (sys, _, b) = instance(5, 4, 6, 1);
        let cfg = SolverConfig::default();
        assert!(warm_start_solve(&sys, &b, &cfg, &[]).is_err());
        assert!(warm_start_solve(&sys, &b, &cfg, &[1.0, 2.0]).is_err());
        assert!(warm_start_solve(&sys, &b, &cfg, &[1.0, 1.0]).is_err());
        let s = default_lambda_schedule(&sys, &b).unwrap();
        assert_eq!(s.len(), DEFAULT_SCHEDULE_LEN);
        assert!(s.windows(2).all(|w| (w[1] - 0.5 * w[0]).abs() < 1e-15 * w[0]));
    }

    #[test]
    fn single_lambda_schedule_matches_noisy_solve() {
        let (sys, _, b) = instance(6, 6, 14, 1);
        let cfg = SolverConfig {
            epsilon: 1e-3,
            lambda: 0.7,
            ..Default::default()
        };
        let a = warm_start_solve(&sys, &b, &cfg, &[0.7]).unwrap();
        let c = solve_cprl_noisy(&sys, &b, &cfg).unwrap();
        assert_eq!(a.x, c.x);
    }

    #[test]
    fn trace_csv_header() {
        let (sys, _, b) = instance(7, 4, 8, 1);
        let cfg = SolverConfig {
            record_trace: true,
            ..Default::default()
        };
        let r = solve_cprl(&sys, &b, &cfg).unwrap();
        assert_eq!(r.trace.len(), r.iterations);
        let mut buf = Vec::new();
        r.write_trace_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("iter,primal_res,dual_res,objective,gap\n"));
    }
}
