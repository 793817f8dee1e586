use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cprl::bench::audio::{audio_pipeline_with, read_samples, synthetic_note, AudioBasis};
use cprl::bench::instance::{derive_seed, Ensemble};
use cprl::bench::sweep::{
    coherence_contour, run_sweep, write_contour_csv, Instance, Method, Noise, SweepGrid,
};
use cprl::bench::{success_criterion, SUPPORT_THRESHOLD};
use cprl::certify::{
    coherence_recovery_bound, combinatorial_oracle, estimate_rip, verify_dual_certificate, RipMode, Sampling,
};
use cprl::greedy::{gcprl, GreedyConfig};
use cprl::lifting::{Measurements, SensingSystem};
use cprl::linalg::ComplexVector;
use cprl::solver::{
    default_lambda_schedule, solve_cprl, solve_cprl_noisy, solve_penalized, solve_phaselift,
    warm_start_solve, SolveResult, SolveStatus, SolverConfig,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::args::{
    AudioArgs, CertifyArgs, CertifyKindArg, InstanceArgs, SolveArgs, SolveMethodArg, SweepArgs,
};
use crate::output::OutDir;

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_NOT_CONVERGED: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;

fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
        }
    }
}

fn resolve_seed(flag: Option<u64>, from_config: Option<u64>) -> u64 {
    flag.or(from_config).unwrap_or_else(|| {
        let seed = rand::random::<u64>();
        eprintln!("seed: {seed}");
        seed
    })
}

fn print_config<C: Serialize>(config: &C) -> Result<u8> {
    let text = serde_json::to_string_pretty(config)?;
    let _ = writeln!(std::io::stdout(), "{text}");
    Ok(EXIT_OK)
}

fn status_code(status: SolveStatus) -> u8 {
    match status {
        SolveStatus::Converged => EXIT_OK,
        SolveStatus::MaxIters => EXIT_NOT_CONVERGED,
        SolveStatus::Infeasible => EXIT_INFEASIBLE,
    }
}

fn set_threads(jobs: Option<usize>) {
    if let Some(j) = jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global();
    }
}

/// Either an instance file or generator settings.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InstanceSource {
    pub instance: Option<PathBuf>,
    pub ensemble: Ensemble,
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub k: usize,
    pub noise: f64,
}

impl Default for InstanceSource {
    fn default() -> Self {
        Self {
            instance: None,
            ensemble: Ensemble::Gaussian,
            n: 16,
            big_n: 48,
            k: 2,
            noise: 0.0,
        }
    }
}

impl InstanceSource {
    fn apply(&mut self, a: &InstanceArgs) -> Result<()> {
        if let Some(p) = &a.instance {
            self.instance = Some(p.clone());
        }
        if let Some(e) = &a.ensemble {
            self.ensemble = e.parse()?;
            if a.instance.is_none() {
                self.instance = None;
            }
        }
        set(&mut self.n, a.n);
        set(&mut self.big_n, a.big_n);
        set(&mut self.k, a.k);
        set(&mut self.noise, a.noise);
        Ok(())
    }

    fn check(&self) -> Result<()> {
        if let Some(p) = &self.instance {
            if !p.is_file() {
                bail!("instance file {} not found", p.display());
            }
        }
        Ok(())
    }

    fn load(&self, seed: u64) -> Result<InstanceFile> {
        if let Some(p) = &self.instance {
            let text = fs::read_to_string(p).with_context(|| format!("reading instance {}", p.display()))?;
            let inst: InstanceFile =
                serde_json::from_str(&text).with_context(|| format!("parsing instance {}", p.display()))?;
            inst.b.check_len(&inst.system)?;
            return Ok(inst);
        }
        let noise = if self.noise > 0.0 {
            Noise::Uniform(self.noise)
        } else {
            Noise::None
        };
        let g = Instance::generate(self.n, self.big_n, self.k, self.ensemble, noise, seed)?;
        Ok(InstanceFile {
            system: g.system,
            b: g.b,
            x: Some(g.x),
        })
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub system: SensingSystem,
    pub b: Measurements,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<ComplexVector>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Cprl,
    Phaselift,
    Noisy,
    Penalized,
    Warm,
    Gcprl,
}

impl From<SolveMethodArg> for SolveMethod {
    fn from(m: SolveMethodArg) -> Self {
        match m {
            SolveMethodArg::Cprl => SolveMethod::Cprl,
            SolveMethodArg::Phaselift => SolveMethod::Phaselift,
            SolveMethodArg::Noisy => SolveMethod::Noisy,
            SolveMethodArg::Penalized => SolveMethod::Penalized,
            SolveMethodArg::Warm => SolveMethod::Warm,
            SolveMethodArg::Gcprl => SolveMethod::Gcprl,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub seed: Option<u64>,
    pub method: SolveMethod,
    pub source: InstanceSource,
    pub solver: SolverConfig,
    pub greedy: GreedyConfig,
    /// Decreasing lambda values for the warm start; derived from the data when absent.
    pub schedule: Option<Vec<f64>>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            seed: None,
            method: SolveMethod::Cprl,
            source: InstanceSource::default(),
            solver: SolverConfig::default(),
            greedy: GreedyConfig::default(),
            schedule: None,
        }
    }
}

#[derive(Serialize)]
struct SolveReport<'a> {
    method: SolveMethod,
    support: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    truth_support: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    success: Option<bool>,
    result: &'a SolveResult,
}

pub fn solve(a: SolveArgs) -> Result<u8> {
    let mut cfg: SolveConfig = load_config(a.common.config.as_deref())?;
    cfg.source.apply(&a.instance)?;
    if let Some(m) = a.method {
        cfg.method = m.into();
    }
    set(&mut cfg.solver.lambda, a.lambda);
    set(&mut cfg.solver.epsilon, a.epsilon);
    set(&mut cfg.solver.mu, a.mu);
    set(&mut cfg.solver.max_iters, a.max_iters);
    if let Some(t) = a.tol {
        cfg.solver.tol_primal = t;
        cfg.solver.tol_dual = t;
    }
    set(&mut cfg.greedy.gamma, a.gamma);
    if let Some(j) = a.common.jobs {
        cfg.greedy.candidate_parallelism = j.max(1);
    }
    cfg.solver.record_trace |= a.trace;
    cfg.seed = Some(resolve_seed(a.common.seed, cfg.seed));
    cfg.solver.validate()?;
    cfg.source.check()?;
    if a.common.dry_run {
        return print_config(&cfg);
    }
    let seed = cfg.seed.unwrap_or_default();
    let inst = cfg.source.load(seed)?;
    let (result, greedy_trace) = match cfg.method {
        SolveMethod::Cprl => (solve_cprl(&inst.system, &inst.b, &cfg.solver)?, None),
        SolveMethod::Phaselift => (solve_phaselift(&inst.system, &inst.b, &cfg.solver)?, None),
        SolveMethod::Noisy => (solve_cprl_noisy(&inst.system, &inst.b, &cfg.solver)?, None),
        SolveMethod::Penalized => (solve_penalized(&inst.system, &inst.b, &cfg.solver)?, None),
        SolveMethod::Warm => {
            let schedule = match &cfg.schedule {
                Some(s) => s.clone(),
                None => default_lambda_schedule(&inst.system, &inst.b)?,
            };
            (
                warm_start_solve(&inst.system, &inst.b, &cfg.solver, &schedule)?,
                None,
            )
        }
        SolveMethod::Gcprl => {
            let (res, trace) = gcprl(&inst.system, &inst.b, &cfg.greedy)?;
            (res, Some(trace))
        }
    };
    let mut out = OutDir::create(&a.common.out)?;
    if cfg.source.instance.is_none() {
        out.write_json("instance.json", &inst, "generated instance")?;
    }
    let report = SolveReport {
        method: cfg.method,
        support: result.signal.support(SUPPORT_THRESHOLD),
        truth_support: inst.x.as_ref().map(|x| x.support(0.0)),
        success: inst.x.as_ref().map(|x| success_criterion(&result.signal, x)),
        result: &result,
    };
    out.write_json("result.json", &report, "solver result")?;
    if cfg.solver.record_trace {
        let mut buf = Vec::new();
        result.write_trace_csv(&mut buf)?;
        out.write_bytes("trace.csv", &buf, "per-iteration residuals")?;
    }
    if let Some(trace) = greedy_trace {
        let mut buf = Vec::new();
        trace.write_csv(&mut buf)?;
        out.write_bytes("greedy_trace.csv", &buf, "greedy rounds")?;
    }
    out.finish("solve", seed, &cfg)?;
    println!(
        "status {:?}, iterations {}, gap {:.4}, support {:?}",
        result.status, result.iterations, result.gap, report.support
    );
    Ok(status_code(result.status))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertifyKind {
    Coherence,
    Rip,
    Rip1,
    Dual,
    Oracle,
}

impl From<CertifyKindArg> for CertifyKind {
    fn from(k: CertifyKindArg) -> Self {
        match k {
            CertifyKindArg::Coherence => CertifyKind::Coherence,
            CertifyKindArg::Rip => CertifyKind::Rip,
            CertifyKindArg::Rip1 => CertifyKind::Rip1,
            CertifyKindArg::Dual => CertifyKind::Dual,
            CertifyKindArg::Oracle => CertifyKind::Oracle,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyConfig {
    pub seed: Option<u64>,
    pub kind: CertifyKind,
    pub source: InstanceSource,
    pub sparsity: usize,
    /// Random patterns for RIP estimates; exhaustive when absent.
    pub samples: Option<usize>,
    pub result: Option<PathBuf>,
    pub k_max: usize,
    pub tol: f64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            seed: None,
            kind: CertifyKind::Coherence,
            source: InstanceSource::default(),
            sparsity: 4,
            samples: None,
            result: None,
            k_max: 2,
            tol: 1e-3,
        }
    }
}

#[derive(Deserialize)]
struct SavedResult {
    result: SolveResult,
}

pub fn certify(a: CertifyArgs) -> Result<u8> {
    let mut cfg: CertifyConfig = load_config(a.common.config.as_deref())?;
    cfg.source.apply(&a.instance)?;
    if let Some(k) = a.kind {
        cfg.kind = k.into();
    }
    set(&mut cfg.sparsity, a.sparsity);
    if a.samples.is_some() {
        cfg.samples = a.samples;
    }
    if a.result.is_some() {
        cfg.result = a.result.clone();
    }
    set(&mut cfg.k_max, a.k_max);
    set(&mut cfg.tol, a.tol);
    cfg.seed = Some(resolve_seed(a.common.seed, cfg.seed));
    cfg.source.check()?;
    if cfg.kind == CertifyKind::Dual {
        match &cfg.result {
            None => bail!("the dual check needs --result"),
            Some(p) if !p.is_file() => bail!("result file {} not found", p.display()),
            _ => {}
        }
    }
    set_threads(a.common.jobs);
    if a.common.dry_run {
        return print_config(&cfg);
    }
    let seed = cfg.seed.unwrap_or_default();
    let inst = cfg.source.load(seed)?;
    let sampling = match cfg.samples {
        Some(s) => Sampling::Random(s),
        None => Sampling::Exhaustive,
    };
    let mut oracle = None;
    let cert = match cfg.kind {
        CertifyKind::Coherence => coherence_recovery_bound(&inst.system)?,
        CertifyKind::Rip => estimate_rip(&inst.system, cfg.sparsity, RipMode::L2, sampling, seed)?,
        CertifyKind::Rip1 => estimate_rip(&inst.system, cfg.sparsity, RipMode::L1, sampling, seed)?,
        CertifyKind::Dual => {
            let path = cfg.result.as_deref().unwrap_or(Path::new(""));
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let saved: SavedResult =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            let r = saved.result;
            verify_dual_certificate(
                &inst.system,
                &inst.b,
                &r.x,
                &r.dual_mu,
                &r.dual_z,
                r.lambda,
                cfg.tol,
            )?
        }
        CertifyKind::Oracle => {
            let sol = combinatorial_oracle(&inst.system, &inst.b, cfg.k_max)?;
            let cert = sol.to_certificate();
            oracle = Some(sol);
            cert
        }
    };
    let mut out = OutDir::create(&a.common.out)?;
    out.write_json("certificate.json", &cert, "certificate")?;
    if let Some(sol) = &oracle {
        out.write_json("oracle.json", sol, "oracle solution")?;
    }
    out.finish("certify", seed, &cfg)?;
    println!(
        "{:?}: value {:.6}, holds {}; {}",
        cert.kind, cert.value, cert.holds, cert.detail
    );
    Ok(if cert.holds { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub seed: Option<u64>,
    pub grid: SweepGrid,
    /// Run the coherence contour over `grid.ns` x `grid.Ns` instead.
    pub contour: bool,
    pub realizations: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            seed: None,
            grid: SweepGrid::default(),
            contour: false,
            realizations: 10,
        }
    }
}

fn parse_counts(text: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let (lo, hi, step): (usize, usize, usize) = (parts[0].parse()?, parts[1].parse()?, parts[2].parse()?);
        if step == 0 || lo > hi {
            bail!("bad range '{text}'");
        }
        return Ok((lo..=hi).step_by(step).collect());
    }
    text.split(',')
        .map(|s| s.trim().parse().with_context(|| format!("bad count '{s}'")))
        .collect()
}

pub fn sweep(a: SweepArgs) -> Result<u8> {
    let mut cfg: SweepConfig = load_config(a.common.config.as_deref())?;
    let g = &mut cfg.grid;
    set(&mut g.ns, a.ns.clone());
    if let Some(s) = &a.big_ns {
        g.big_ns = parse_counts(s)?;
    }
    set(&mut g.ks, a.ks.clone());
    if let Some(ms) = &a.methods {
        g.methods = ms.iter().map(|m| m.parse::<Method>()).collect::<Result<_, _>>()?;
    }
    if let Some(e) = &a.ensemble {
        g.ensemble = e.parse()?;
    }
    set(&mut g.trials, a.trials);
    if let Some(amp) = a.noise {
        g.noise = if amp > 0.0 {
            Noise::Uniform(amp)
        } else {
            Noise::None
        };
    }
    set(&mut g.solver.lambda, a.lambda);
    g.warm_start |= a.warm_start;
    g.early_stop |= a.early_stop;
    g.stop_after_crossing |= a.stop_after_crossing;
    set(&mut g.jobs, a.common.jobs);
    cfg.contour |= a.contour;
    set(&mut cfg.realizations, a.realizations);
    let seed = resolve_seed(a.common.seed, cfg.seed);
    cfg.seed = Some(seed);
    cfg.grid.master_seed = seed;
    if cfg.contour {
        if cfg.grid.ns.is_empty() || cfg.grid.big_ns.is_empty() || cfg.realizations == 0 {
            bail!("contour needs nonempty ns, Ns and positive realizations");
        }
    } else {
        cfg.grid.validate()?;
    }
    if a.common.dry_run {
        return print_config(&cfg);
    }
    if cfg.contour {
        let cells = coherence_contour(&cfg.grid.ns, &cfg.grid.big_ns, cfg.realizations, seed)?;
        let mut out = OutDir::create(&a.common.out)?;
        let mut buf = Vec::new();
        write_contour_csv(&cells, &mut buf)?;
        out.write_bytes("contour.csv", &buf, "averaged coherence bound per cell")?;
        out.write_json("contour.json", &cells, "averaged coherence bound per cell")?;
        out.finish("sweep", seed, &cfg)?;
        for c in &cells {
            match c.mean_bound {
                Some(v) => println!("n {:>3} N {:>3}: {:.4}", c.n, c.big_n, v),
                None => println!("n {:>3} N {:>3}: undefined", c.n, c.big_n),
            }
        }
        return Ok(EXIT_OK);
    }
    let report = run_sweep(&cfg.grid)?;
    let mut out = OutDir::create(&a.common.out)?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    out.write_bytes("sweep.csv", &buf, "success rate per cell")?;
    out.write_bytes(
        "sweep.json",
        format!("{}\n", report.to_json()?).as_bytes(),
        "full sweep report",
    )?;
    out.finish("sweep", seed, &cfg)?;
    for c in &report.crossings {
        match c.big_n {
            Some(m) => println!(
                "{} n {} k {}: target reached at N = {m}",
                c.method.name(),
                c.n,
                c.k
            ),
            None => println!("{} n {} k {}: target not reached", c.method.name(), c.n, c.k),
        }
    }
    Ok(EXIT_OK)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AudioConfig {
    pub seed: Option<u64>,
    pub input: Option<PathBuf>,
    pub s: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub n: usize,
    pub fundamental: usize,
    pub harmonics: usize,
    pub solver: SolverConfig,
}

impl Default for AudioConfig {
    fn default() -> Self {
        Self {
            seed: None,
            input: None,
            s: 32,
            big_n: 30,
            n: 64,
            fundamental: 5,
            harmonics: 1,
            solver: SolverConfig {
                lambda: 2.0,
                max_iters: 20000,
                tol_primal: 1e-8,
                tol_dual: 1e-8,
                ..SolverConfig::default()
            },
        }
    }
}

pub fn audio(a: AudioArgs) -> Result<u8> {
    let mut cfg: AudioConfig = load_config(a.common.config.as_deref())?;
    if a.input.is_some() {
        cfg.input = a.input.clone();
    }
    set(&mut cfg.s, a.s);
    set(&mut cfg.big_n, a.big_n);
    set(&mut cfg.n, a.n);
    set(&mut cfg.fundamental, a.fundamental);
    set(&mut cfg.harmonics, a.harmonics);
    set(&mut cfg.solver.lambda, a.lambda);
    set(&mut cfg.solver.max_iters, a.max_iters);
    if let Some(t) = a.tol {
        cfg.solver.tol_primal = t;
        cfg.solver.tol_dual = t;
    }
    let seed = resolve_seed(a.common.seed, cfg.seed);
    cfg.seed = Some(seed);
    cfg.solver.validate()?;
    if let Some(p) = &cfg.input {
        if !p.is_file() {
            bail!("input file {} not found", p.display());
        }
    }
    if a.common.dry_run {
        return print_config(&cfg);
    }
    let basis = AudioBasis::draw(cfg.s, cfg.big_n, cfg.n, seed)?;
    let samples = match &cfg.input {
        Some(p) => {
            let all = read_samples(p)?;
            if all.len() < cfg.s {
                bail!("{} holds {} samples, need {}", p.display(), all.len(), cfg.s);
            }
            all[..cfg.s].to_vec()
        }
        None => synthetic_note(&basis, cfg.fundamental, cfg.harmonics, derive_seed(seed, 1, 0))?.samples,
    };
    let report = audio_pipeline_with(&samples, &basis, seed, &cfg.solver)?;
    let mut out = OutDir::create(&a.common.out)?;
    out.write_json("audio_report.json", &report, "audio recovery report")?;
    let mut csv = String::from("t,z,z_est\n");
    for (t, (z, e)) in samples.iter().zip(&report.z_est).enumerate() {
        csv.push_str(&format!("{t},{z},{e}\n"));
    }
    out.write_bytes("samples.csv", csv.as_bytes(), "true and recovered samples")?;
    out.finish("audio", seed, &cfg)?;
    println!(
        "status {:?}, relative error {:.3e}, imaginary residual {:.3e}, support {:?}",
        report.status, report.relative_error, report.imag_residual, report.support
    );
    Ok(status_code(report.status))
}
