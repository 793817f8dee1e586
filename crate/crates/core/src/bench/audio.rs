//! Audio experiment: a real signal sparse in an overcomplete Fourier basis,
//! observed through magnitudes of random real mixtures.
//!
//! `z = F_inv x` with `F_inv` made of `s` random rows of the `n x n` inverse
//! DFT, `R` real Gaussian with unit-norm rows, and `b = |R z|^2`.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::instance::{rng_from_seed, TrialRng};
use crate::error::{invalid, Error, Result};
use crate::lifting::{inverse_dft_matrix, Measurements, SensingSystem};
use crate::linalg::{ComplexMatrix, ComplexVector, C64};
use crate::solver::{solve_cprl, SolveStatus, SolverConfig};

/// Reads one real sample per line; a non-numeric first line is taken as a header.
pub fn read_samples_csv(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;
    let mut out = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let Some(field) = record.get(0) else { continue };
        let field = field.trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            Ok(_) => return Err(Error::Format(format!("non-finite sample on line {}", line + 1))),
            Err(_) if line == 0 => continue,
            Err(_) => {
                return Err(Error::Format(format!(
                    "bad sample '{field}' on line {}",
                    line + 1
                )))
            }
        }
    }
    Ok(out)
}

/// Reads a 16-bit PCM mono WAV file, scaled to `[-1, 1)`.
pub fn read_samples_wav(path: &Path) -> Result<Vec<f64>> {
    let reader = hound::WavReader::open(path).map_err(|e| Error::Format(e.to_string()))?;
    let spec = reader.spec();
    if spec.channels != 1 || spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(Error::Format(format!(
            "expected 16-bit PCM mono, got {} channels, {} bits",
            spec.channels, spec.bits_per_sample
        )));
    }
    reader
        .into_samples::<i16>()
        .map(|s| {
            s.map(|v| v as f64 / 32768.0)
                .map_err(|e| Error::Format(e.to_string()))
        })
        .collect()
}

/// Dispatches on the extension (`.wav` or anything else as CSV).
pub fn read_samples(path: &Path) -> Result<Vec<f64>> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("wav") => read_samples_wav(path),
        _ => read_samples_csv(path),
    }
}

/// Writes samples as a 16-bit PCM mono WAV (clipped to `[-1, 1]`).
pub fn write_samples_wav(path: &Path, samples: &[f64], sample_rate: u32) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(|e| Error::Format(e.to_string()))?;
    for &s in samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        w.write_sample(v).map_err(|e| Error::Format(e.to_string()))?;
    }
    w.finalize().map_err(|e| Error::Format(e.to_string()))
}

/// The random pieces of one experiment, drawn from a single seed.
#[derive(Clone, Debug)]
pub struct AudioBasis {
    /// Rows of the inverse DFT kept in `F_inv`, in increasing order.
    pub rows: Vec<usize>,
    /// `s x n`.
    pub f_inv: ComplexMatrix,
    /// `N x s`, unit-norm rows.
    pub mixing: Vec<Vec<f64>>,
}

impl AudioBasis {
    pub fn draw(s: usize, big_n: usize, n: usize, seed: u64) -> Result<Self> {
        if s < 2 || big_n == 0 || n < s {
            return invalid(format!("invalid audio dimensions s={s}, N={big_n}, n={n}"));
        }
        let mut rng = rng_from_seed(seed);
        let mut rows = sample(&mut rng, n, s).into_vec();
        rows.sort_unstable();
        let f_inv = inverse_dft_matrix(n).select_rows(&rows)?;
        let mixing = (0..big_n).map(|_| unit_row(s, &mut rng)).collect();
        Ok(Self { rows, f_inv, mixing })
    }

    /// `A = R F_inv`.
    pub fn system(&self) -> Result<SensingSystem> {
        let (s, n) = (self.f_inv.rows(), self.f_inv.cols());
        let a = ComplexMatrix::from_fn(self.mixing.len(), n, |i, j| {
            (0..s).map(|t| self.f_inv.get(t, j) * self.mixing[i][t]).sum()
        });
        SensingSystem::new(a)
    }

    /// `|R z|^2`.
    pub fn measure(&self, z: &[f64]) -> Result<Measurements> {
        if z.len() != self.f_inv.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.f_inv.rows(),
                got: z.len(),
            });
        }
        Measurements::new(
            self.mixing
                .iter()
                .map(|r| r.iter().zip(z).map(|(p, q)| p * q).sum::<f64>().powi(2))
                .collect(),
        )
    }
}

fn unit_row(s: usize, rng: &mut TrialRng) -> Vec<f64> {
    loop {
        let r: Vec<f64> = (0..s).map(|_| rng.sample(StandardNormal)).collect();
        let nrm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nrm > 0.0 {
            return r.into_iter().map(|v| v / nrm).collect();
        }
    }
}

/// A sustained note: harmonics `h * fundamental` with unit-modulus
/// coefficients and their conjugate mirrors, so `z = F_inv x` is real.
#[derive(Clone, Debug)]
pub struct SyntheticNote {
    pub coefficients: ComplexVector,
    pub samples: Vec<f64>,
}

pub fn synthetic_note(
    basis: &AudioBasis,
    fundamental: usize,
    harmonics: usize,
    seed: u64,
) -> Result<SyntheticNote> {
    let n = basis.f_inv.cols();
    if fundamental == 0 || harmonics == 0 || 2 * fundamental * harmonics >= n {
        return invalid(format!(
            "harmonics {harmonics} of fundamental {fundamental} do not fit below n/2 = {}",
            n / 2
        ));
    }
    let mut rng = rng_from_seed(seed);
    let mut x = vec![C64::new(0.0, 0.0); n];
    for h in 1..=harmonics {
        let bin = h * fundamental;
        let c = C64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI));
        x[bin] = c;
        x[n - bin] = c.conj();
    }
    let coefficients = ComplexVector::new(x)?;
    let z = basis.f_inv.mul_vec(&coefficients)?;
    Ok(SyntheticNote {
        samples: z.as_slice().iter().map(|v| v.re).collect(),
        coefficients,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AudioReport {
    pub s: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub n: usize,
    pub seed: u64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub gap: f64,
    /// Support of the recovered coefficients at the benchmark threshold.
    pub support: Vec<usize>,
    /// `||z_est - z|| / ||z||` after rotation and sign choice.
    pub relative_error: f64,
    /// `max |Im(c z_est)| / max |z_est|` after the best global rotation `c`.
    pub imag_residual: f64,
    /// Rotated real part of the estimate.
    pub z_est: Vec<f64>,
    pub runtime_ms: f64,
}

/// Unit scalar `c` minimizing `||Im(c v)||_2`.
pub fn best_rotation(v: &[C64]) -> C64 {
    // Align the principal axis of the points (re, im) with the real line.
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for z in v {
        sxx += z.re * z.re;
        syy += z.im * z.im;
        sxy += z.re * z.im;
    }
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    C64::from_polar(1.0, -angle)
}

/// Recovers `samples` from magnitudes of `N` random mixtures with CPRL.
pub fn audio_pipeline(
    samples: &[f64],
    big_n: usize,
    n: usize,
    seed: u64,
    config: &SolverConfig,
) -> Result<AudioReport> {
    let basis = AudioBasis::draw(samples.len(), big_n, n, seed)?;
    audio_pipeline_with(samples, &basis, seed, config)
}

/// As [`audio_pipeline`] with a prepared basis.
pub fn audio_pipeline_with(
    samples: &[f64],
    basis: &AudioBasis,
    seed: u64,
    config: &SolverConfig,
) -> Result<AudioReport> {
    if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let start = Instant::now();
    let system = basis.system()?;
    let b = basis.measure(samples)?;
    let result = solve_cprl(&system, &b, config)?;
    let z_est = basis.f_inv.mul_vec(&result.signal)?;
    let c = best_rotation(z_est.as_slice());
    let rotated: Vec<C64> = z_est.as_slice().iter().map(|v| v * c).collect();
    let peak = rotated.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let imag_residual = if peak > 0.0 {
        rotated.iter().fold(0.0f64, |m, v| m.max(v.im.abs())) / peak
    } else {
        0.0
    };
    let real: Vec<f64> = rotated.iter().map(|v| v.re).collect();
    let z_norm = samples.iter().map(|v| v * v).sum::<f64>().sqrt();
    let err = |sign: f64| {
        real.iter()
            .zip(samples)
            .map(|(e, z)| (sign * e - z).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let (plus, minus) = (err(1.0), err(-1.0));
    let sign = if minus < plus { -1.0 } else { 1.0 };
    let abs_err = plus.min(minus);
    let relative_error = if z_norm > 0.0 { abs_err / z_norm } else { abs_err };
    Ok(AudioReport {
        s: samples.len(),
        big_n: basis.mixing.len(),
        n: basis.f_inv.cols(),
        seed,
        status: result.status,
        iterations: result.iterations,
        gap: result.gap,
        support: result.signal.support(super::SUPPORT_THRESHOLD),
        relative_error,
        imag_residual,
        z_est: real.into_iter().map(|v| sign * v).collect(),
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_makes_collinear_points_real() {
        let rot = C64::from_polar(1.0, 0.7);
        let v: Vec<C64> = [1.0, -2.0, 0.5].iter().map(|&r| rot * r).collect();
        let c = best_rotation(&v);
        assert!(v.iter().all(|z| (z * c).im.abs() < 1e-12));
    }

    #[test]
    fn synthetic_note_is_real_and_sparse() {
        let basis = AudioBasis::draw(16, 12, 32, 1).unwrap();
        let note = synthetic_note(&basis, 3, 2, 2).unwrap();
        assert_eq!(note.coefficients.support(0.0), vec![3, 6, 26, 29]);
        let z = basis.f_inv.mul_vec(&note.coefficients).unwrap();
        assert!(z.as_slice().iter().all(|v| v.im.abs() < 1e-12));
        for row in &basis.mixing {
            assert!((row.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_signal_round_trip() {
        let r = audio_pipeline(&[0.0; 8], 6, 16, 4, &SolverConfig::default()).unwrap();
        assert!(r.z_est.iter().all(|v| *v == 0.0));
        assert_eq!(r.relative_error, 0.0);
    }

    #[test]
    fn csv_ingestion() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        std::fs::write(&p, "sample\n0.5\n-0.25\n").unwrap();
        assert_eq!(read_samples(&p).unwrap(), vec![0.5, -0.25]);
        std::fs::write(&p, "0.5\nabc\n").unwrap();
        assert!(read_samples(&p).is_err());
    }

    #[test]
    fn wav_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.wav");
        write_samples_wav(&p, &[0.5, -0.25, 0.0], 8000).unwrap();
        let back = read_samples(&p).unwrap();
        assert!(back
            .iter()
            .zip([0.5, -0.25, 0.0])
            .all(|(a, b)| (a - b).abs() < 1e-4));
    }
}
