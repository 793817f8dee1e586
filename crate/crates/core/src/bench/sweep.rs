//! Success-rate sweeps over `(n, N, k)` grids and the coherence contour.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cs::{solve_cs_baseline, CsConfig};
use super::instance::{
    add_noise, derive_seed, gen_ensemble, gen_sparse_real_signal, gen_sparse_signal, rng_from_seed, Ensemble,
};
use super::success_criterion;
use crate::certify::coherence_recovery_bound;
use crate::error::{invalid, Error, Result};
use crate::greedy::{gcprl, GreedyConfig};
use crate::lifting::{Measurements, SensingSystem};
use crate::linalg::ComplexVector;
use crate::solver::{
    default_lambda_schedule, solve_cprl, solve_cprl_noisy, solve_phaselift, warm_start_solve, SolveStatus,
    SolverConfig,
};

/// Success rate a cell must reach to count as recovered.
pub const TARGET_RATE: f64 = 0.95;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Cprl,
    PhaseLift,
    Gcprl,
    CsBaseline,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Cprl => "cprl",
            Method::PhaseLift => "phaselift",
            Method::Gcprl => "gcprl",
            Method::CsBaseline => "cs",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cprl" => Ok(Method::Cprl),
            "phaselift" | "pl" => Ok(Method::PhaseLift),
            "gcprl" | "greedy" => Ok(Method::Gcprl),
            "cs" | "cs_baseline" => Ok(Method::CsBaseline),
            other => invalid(format!("unknown method '{other}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "amplitude")]
pub enum Noise {
    None,
    Uniform(f64),
}

/// One random instance: system, true signal, complex output and observations.
#[derive(Clone, Debug)]
pub struct Instance {
    pub system: SensingSystem,
    pub x: ComplexVector,
    /// `A x`, available to the compressive sensing baseline only.
    pub y: ComplexVector,
    pub b: Measurements,
}

impl Instance {
    pub fn generate(
        n: usize,
        big_n: usize,
        k: usize,
        ensemble: Ensemble,
        noise: Noise,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = rng_from_seed(seed);
        let system = gen_ensemble(ensemble, big_n, n, &mut rng)?;
        let x = if ensemble == Ensemble::RealGaussian {
            gen_sparse_real_signal(n, k, &mut rng)?
        } else {
            gen_sparse_signal(n, k, &mut rng)?
        };
        let y = system.matrix().mul_vec(&x)?;
        let clean = system.measure(&x)?;
        let b = match noise {
            Noise::None => clean,
            Noise::Uniform(a) => add_noise(&clean, a, &mut rng)?,
        };
        Ok(Self { system, x, y, b })
    }
}

/// Seed of trial `trial` in cell `(n, N, k)`; independent of the method so
/// every method sees the same instances.
pub fn instance_seed(master: u64, n: usize, big_n: usize, k: usize, trial: usize) -> u64 {
    let cell = ((n as u64) << 40) ^ ((big_n as u64) << 20) ^ k as u64;
    derive_seed(master, cell, trial as u64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialSpec {
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub k: usize,
    pub ensemble: Ensemble,
    pub noise: Noise,
    pub method: Method,
    pub seed: u64,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub greedy: GreedyConfig,
    #[serde(default)]
    pub cs: CsConfig,
    /// Run CPRL over the default decreasing `lambda` schedule.
    #[serde(default)]
    pub warm_start: bool,
}

impl TrialSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.big_n == 0 {
            return invalid(format!("invalid dimensions n={}, N={}", self.n, self.big_n));
        }
        if self.k > self.n {
            return invalid(format!("sparsity {} exceeds dimension {}", self.k, self.n));
        }
        if let Noise::Uniform(a) = self.noise {
            if !(a >= 0.0 && a.is_finite()) {
                return invalid(format!("noise amplitude must be >= 0, got {a}"));
            }
        }
        self.solver.validate()?;
        self.greedy.validate(self.n)?;
        self.cs.validate()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialOutcome {
    pub success: bool,
    pub runtime_ms: f64,
    pub status: Option<SolveStatus>,
    pub estimate: ComplexVector,
    pub truth: ComplexVector,
}

/// Generates the instance for `spec.seed` and runs the method on it.
pub fn run_trial(spec: &TrialSpec) -> Result<TrialOutcome> {
    let inst = Instance::generate(spec.n, spec.big_n, spec.k, spec.ensemble, spec.noise, spec.seed)?;
    run_method(spec, &inst)
}

/// Runs the method of `spec` on a given instance.
pub fn run_method(spec: &TrialSpec, inst: &Instance) -> Result<TrialOutcome> {
    let start = Instant::now();
    let noisy = !matches!(spec.noise, Noise::None);
    let (estimate, status) = match spec.method {
        Method::Cprl if spec.warm_start => {
            let schedule = default_lambda_schedule(&inst.system, &inst.b)?;
            let r = warm_start_solve(&inst.system, &inst.b, &spec.solver, &schedule)?;
            (r.signal, Some(r.status))
        }
        Method::Cprl if noisy => {
            let r = solve_cprl_noisy(&inst.system, &inst.b, &spec.solver)?;
            (r.signal, Some(r.status))
        }
        Method::Cprl => {
            let r = solve_cprl(&inst.system, &inst.b, &spec.solver)?;
            (r.signal, Some(r.status))
        }
        Method::PhaseLift => {
            let r = solve_phaselift(&inst.system, &inst.b, &spec.solver)?;
            (r.signal, Some(r.status))
        }
        Method::Gcprl => {
            let (r, _) = gcprl(&inst.system, &inst.b, &spec.greedy)?;
            (r.signal, Some(r.status))
        }
        Method::CsBaseline => (solve_cs_baseline(&inst.system, &inst.y, &spec.cs)?, None),
    };
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(TrialOutcome {
        success: success_criterion(&estimate, &inst.x),
        runtime_ms,
        status,
        estimate,
        truth: inst.x.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub ns: Vec<usize>,
    #[serde(rename = "Ns")]
    pub big_ns: Vec<usize>,
    pub ks: Vec<usize>,
    pub methods: Vec<Method>,
    pub ensemble: Ensemble,
    pub noise: Noise,
    pub trials: usize,
    pub master_seed: u64,
    pub solver: SolverConfig,
    pub greedy: GreedyConfig,
    pub cs: CsConfig,
    pub warm_start: bool,
    /// Stop a cell as soon as its verdict against [`TARGET_RATE`] is settled.
    pub early_stop: bool,
    /// Skip larger `N` for a method once it has crossed the target.
    pub stop_after_crossing: bool,
    /// Worker threads for the trials of a cell.
    pub jobs: usize,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            ns: vec![64],
            big_ns: (8..=64).step_by(4).collect(),
            ks: vec![2],
            methods: vec![Method::CsBaseline, Method::Cprl, Method::PhaseLift],
            ensemble: Ensemble::RandomFourier,
            noise: Noise::None,
            trials: 100,
            master_seed: 0,
            solver: SolverConfig::default(),
            greedy: GreedyConfig::default(),
            cs: CsConfig::default(),
            warm_start: false,
            early_stop: false,
            stop_after_crossing: false,
            jobs: 1,
        }
    }
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.ns.is_empty() || self.big_ns.is_empty() || self.ks.is_empty() || self.methods.is_empty() {
            return invalid("sweep grid has an empty axis");
        }
        if self.trials == 0 {
            return invalid("trials per cell must be positive");
        }
        if self.jobs == 0 {
            return invalid("jobs must be positive");
        }
        Ok(())
    }

    fn spec(&self, n: usize, big_n: usize, k: usize, method: Method, seed: u64) -> TrialSpec {
        TrialSpec {
            n,
            big_n,
            k,
            ensemble: self.ensemble,
            noise: self.noise,
            method,
            seed,
            solver: self.solver.clone(),
            greedy: self.greedy.clone(),
            cs: self.cs.clone(),
            warm_start: self.warm_start,
        }
    }

    /// Number of cells (excluding skips).
    pub fn cell_count(&self) -> usize {
        self.ns.len() * self.big_ns.len() * self.ks.len() * self.methods.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub k: usize,
    pub method: Method,
    pub successes: usize,
    /// Trials actually run (fewer than planned after an early stop).
    pub trials: usize,
    pub planned: usize,
    pub rate: f64,
    /// `successes >= ceil(TARGET_RATE * planned)`.
    pub meets_target: bool,
    pub mean_runtime_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub n: usize,
    pub k: usize,
    pub method: Method,
    /// Smallest scanned `N` meeting the target, if any.
    #[serde(rename = "N")]
    pub big_n: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub master_seed: u64,
    pub target_rate: f64,
    pub cells: Vec<CellReport>,
    pub crossings: Vec<Crossing>,
}

impl SweepReport {
    pub fn cell(&self, n: usize, big_n: usize, k: usize, method: Method) -> Option<&CellReport> {
        self.cells
            .iter()
            .find(|c| c.n == n && c.big_n == big_n && c.k == k && c.method == method)
    }

    pub fn crossing(&self, n: usize, k: usize, method: Method) -> Option<usize> {
        self.crossings
            .iter()
            .find(|c| c.n == n && c.k == k && c.method == method)
            .and_then(|c| c.big_n)
    }

    /// Long format: `n,N,k,method,rate,mean_runtime_ms,successes,trials`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "n",
            "N",
            "k",
            "method",
            "rate",
            "mean_runtime_ms",
            "successes",
            "trials",
        ])?;
        for c in &self.cells {
            out.write_record([
                c.n.to_string(),
                c.big_n.to_string(),
                c.k.to_string(),
                c.method.name().to_string(),
                c.rate.to_string(),
                c.mean_runtime_ms.to_string(),
                c.successes.to_string(),
                c.trials.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn required_successes(planned: usize) -> usize {
    (TARGET_RATE * planned as f64 - 1e-9).ceil() as usize
}

/// Runs up to `planned` trials of one cell; with `early_stop` the loop ends
/// once the verdict is settled. The result does not depend on `pool` size.
fn run_cell(
    grid: &SweepGrid,
    n: usize,
    big_n: usize,
    k: usize,
    method: Method,
    pool: Option<&rayon::ThreadPool>,
) -> CellReport {
    let planned = grid.trials;
    let need = required_successes(planned);
    let chunk = grid.jobs.max(1);
    let mut successes = 0;
    let mut run = 0;
    let mut runtime = 0.0;
    let mut t = 0;
    'outer: while t < planned {
        let hi = (t + chunk).min(planned);
        let trial = |i: usize| {
            let spec = grid.spec(
                n,
                big_n,
                k,
                method,
                instance_seed(grid.master_seed, n, big_n, k, i),
            );
            match run_trial(&spec) {
                Ok(o) => (o.success, o.runtime_ms),
                Err(e) => {
                    log::warn!("trial {i} of cell n={n} N={big_n} k={k} {}: {e}", method.name());
                    (false, 0.0)
                }
            }
        };
        let outcomes: Vec<(bool, f64)> = match pool {
            Some(p) => p.install(|| (t..hi).into_par_iter().map(trial).collect()),
            None => (t..hi).map(trial).collect(),
        };
        for (ok, ms) in outcomes {
            run += 1;
            runtime += ms;
            successes += ok as usize;
            let failures = run - successes;
            if grid.early_stop && (successes >= need || failures > planned - need) {
                break 'outer;
            }
        }
        t = hi;
    }
    CellReport {
        n,
        big_n,
        k,
        method,
        successes,
        trials: run,
        planned,
        rate: successes as f64 / run.max(1) as f64,
        meets_target: successes >= need,
        mean_runtime_ms: runtime / run.max(1) as f64,
    }
}

/// Success rates over the grid with fresh instances per trial and the
/// minimal `N` reaching [`TARGET_RATE`] per `(n, k, method)`.
///
/// Failing trials count as non-successes. Timing aside, the report depends
/// only on the grid and the master seed.
pub fn run_sweep(grid: &SweepGrid) -> Result<SweepReport> {
    grid.validate()?;
    let pool = if grid.jobs > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(grid.jobs)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?,
        )
    } else {
        None
    };
    let mut big_ns = grid.big_ns.clone();
    big_ns.sort_unstable();
    big_ns.dedup();
    let mut cells = Vec::new();
    let mut crossings = Vec::new();
    for &n in &grid.ns {
        for &k in &grid.ks {
            for &method in &grid.methods {
                let mut crossed = None;
                for &big_n in &big_ns {
                    if k > n {
                        continue;
                    }
                    let cell = run_cell(grid, n, big_n, k, method, pool.as_ref());
                    log::info!(
                        "n={n} N={big_n} k={k} {}: {}/{}",
                        method.name(),
                        cell.successes,
                        cell.trials
                    );
                    let meets = cell.meets_target;
                    cells.push(cell);
                    if meets && crossed.is_none() {
                        crossed = Some(big_n);
                        if grid.stop_after_crossing {
                            break;
                        }
                    }
                }
                crossings.push(Crossing {
                    n,
                    k,
                    method,
                    big_n: crossed,
                });
            }
        }
    }
    Ok(SweepReport {
        master_seed: grid.master_seed,
        target_rate: TARGET_RATE,
        cells,
        crossings,
    })
}

/// Minimal `N` in `lo..=hi` reaching [`TARGET_RATE`]: scans upward with
/// `stride`, then refines one step at a time below the first passing value.
pub fn crossing_search(
    grid: &SweepGrid,
    n: usize,
    k: usize,
    method: Method,
    lo: usize,
    hi: usize,
    stride: usize,
) -> Result<Option<usize>> {
    grid.validate()?;
    if lo == 0 || lo > hi || stride == 0 {
        return invalid(format!("invalid crossing range {lo}..={hi} stride {stride}"));
    }
    let passes = |big_n: usize| run_cell(grid, n, big_n, k, method, None).meets_target;
    let mut prev_fail = None;
    let mut big_n = lo;
    loop {
        if passes(big_n) {
            let start = prev_fail.map_or(big_n, |f: usize| f + 1);
            for m in start..big_n {
                if passes(m) {
                    return Ok(Some(m));
                }
            }
            return Ok(Some(big_n));
        }
        prev_fail = Some(big_n);
        if big_n == hi {
            return Ok(None);
        }
        big_n = (big_n + stride).min(hi);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourCell {
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    /// Mean of `0.5 (1 + 1/mu(B))` over the realizations; `None` when skipped.
    pub mean_bound: Option<f64>,
    pub realizations: usize,
}

/// Averaged coherence bound over Gaussian ensembles for every `(n, N)`.
/// Cells whose lifted matrix exceeds the size cap are skipped.
pub fn coherence_contour(
    ns: &[usize],
    big_ns: &[usize],
    realizations: usize,
    seed: u64,
) -> Result<Vec<ContourCell>> {
    if realizations == 0 {
        return invalid("realizations must be positive");
    }
    let mut out = Vec::new();
    for &n in ns {
        for &big_n in big_ns {
            let mut total = 0.0;
            let mut skipped = false;
            for r in 0..realizations {
                let mut rng = rng_from_seed(instance_seed(seed, n, big_n, 0, r));
                let sys = gen_ensemble(Ensemble::Gaussian, big_n, n, &mut rng)?;
                match coherence_recovery_bound(&sys) {
                    Ok(c) => total += c.value,
                    Err(Error::CapExceeded { .. }) => {
                        skipped = true;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            out.push(ContourCell {
                n,
                big_n,
                mean_bound: (!skipped).then(|| total / realizations as f64),
                realizations,
            });
        }
    }
    Ok(out)
}

/// CSV with columns `n,N,mean_bound` (empty bound for skipped cells).
pub fn write_contour_csv<W: Write>(cells: &[ContourCell], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["n", "N", "mean_bound"])?;
    for c in cells {
        out.write_record([
            c.n.to_string(),
            c.big_n.to_string(),
            c.mean_bound.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> SweepGrid {
        SweepGrid {
            ns: vec![8],
            big_ns: vec![24],
            ks: vec![0, 1],
            methods: vec![Method::Cprl, Method::CsBaseline],
            ensemble: Ensemble::Gaussian,
            trials: 4,
            master_seed: 5,
            ..Default::default()
        }
    }

    #[test]
    fn zero_signal_always_succeeds() {
        let report = run_sweep(&small_grid()).unwrap();
        for m in [Method::Cprl, Method::CsBaseline] {
            let c = report.cell(8, 24, 0, m).unwrap();
            assert_eq!(c.successes, c.trials);
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        let strip = |mut r: SweepReport| {
            r.cells.iter_mut().for_each(|c| c.mean_runtime_ms = 0.0);
            r
        };
        let a = strip(run_sweep(&small_grid()).unwrap());
        let b = strip(run_sweep(&small_grid()).unwrap());
        assert_eq!(a, b);
        assert!(a.cells.iter().all(|c| c.successes <= c.trials));
    }

    #[test]
    fn early_stop_settles_verdict() {
        let grid = SweepGrid {
            early_stop: true,
            trials: 20,
            ..small_grid()
        };
        let report = run_sweep(&grid).unwrap();
        let c = report.cell(8, 24, 0, Method::Cprl).unwrap();
        assert!(c.meets_target);
        assert_eq!(c.trials, 19);
    }

    #[test]
    fn trial_spec_json_round_trip() {
        let spec = TrialSpec {
            n: 8,
            big_n: 6,
            k: 1,
            ensemble: Ensemble::Gaussian,
            noise: Noise::Uniform(0.5),
            method: Method::Gcprl,
            seed: 3,
            solver: SolverConfig::default(),
            greedy: GreedyConfig::default(),
            cs: CsConfig::default(),
            warm_start: false,
        };
        let text = serde_json::to_string(&spec).unwrap();
        let back: TrialSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        spec.validate().unwrap();
    }
}
