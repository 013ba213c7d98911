//! Monte-Carlo experiment harness: fixed coding matrix, random blocks,
//! random sign-flip corruption, Gaussian small errors, and the error ratios
//! of each decoder against the ideal and oracle least-squares baselines.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{
    calibrate_unit, sigma_convention, CalibrationMethod, CalibrationOptions, UnitCalibration,
};
use crate::decoders::{decode, oracle_ls, DecoderConfig, DecoderKind};
use crate::error::{Error, Result};
use crate::matrixgen::{gen_gaussian_orthonormal, gen_partial_fourier};
use crate::model::{
    corrupt, encode, CodingMatrix, CorruptionMode, CorruptionPlan, MatrixKind, Signal,
};
use crate::rng::{derive_seed, normal_vector, rng_from_seed};
use crate::solver::ToleranceConfig;
use crate::stats::{mean, median};

/// Codeword entries smaller than this never receive a gross error.
pub const MIN_FLIP_MAGNITUDE: f64 = 1e-12;

/// Reconstruction errors below this are recorded as exactly zero.
pub const ZERO_ERROR: f64 = 1e-12;

const MATRIX_STREAM: u64 = u64::MAX;
const CALIBRATION_STREAM: u64 = u64::MAX - 1;

pub const CSV_HEADER: &str =
    "trial,seed,decoder,err,err_ideal,err_oracle,rho_ideal,rho_oracle,converged";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaRule {
    MedianAbsOver16,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub m: usize,
    pub n: usize,
    pub matrix_kind: MatrixKind,
    pub corruption_rate: f64,
    pub trials: usize,
    pub base_seed: u64,
    pub confidence: f64,
    pub decoders: Vec<DecoderKind>,
    pub reproject: bool,
    pub sigma_rule: SigmaRule,
    pub mc_samples: usize,
    pub calibration_method: CalibrationMethod,
    pub solver_tol: ToleranceConfig,
}

impl ExperimentConfig {
    /// Gaussian matrix, both decoders, reprojection, the median noise rule
    /// and Monte-Carlo thresholds at 95% confidence.
    pub fn new(m: usize, n: usize, corruption_rate: f64, trials: usize) -> Self {
        ExperimentConfig {
            m,
            n,
            matrix_kind: MatrixKind::GaussianOrthonormal,
            corruption_rate,
            trials,
            base_seed: 0,
            confidence: 0.95,
            decoders: vec![DecoderKind::Socp, DecoderKind::Lp],
            reproject: true,
            sigma_rule: SigmaRule::MedianAbsOver16,
            mc_samples: 10_000,
            calibration_method: CalibrationMethod::MonteCarlo,
            solver_tol: ToleranceConfig::default(),
        }
    }

    /// Number of gross errors, `round(ρ m)`.
    pub fn k(&self) -> usize {
        (self.corruption_rate * self.m as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m <= self.n {
            return Err(Error::NeedRedundancy {
                m: self.m,
                n: self.n,
            });
        }
        if !(0.0..1.0).contains(&self.corruption_rate) {
            return Err(Error::InvalidArgument(format!(
                "corruption rate must lie in [0, 1), got {}",
                self.corruption_rate
            )));
        }
        if self.k() > self.m - self.n {
            return Err(Error::InvalidArgument(format!(
                "k = {} gross errors exceed m - n = {}; the oracle baseline would be underdetermined",
                self.k(),
                self.m - self.n
            )));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.decoders.is_empty() {
            return Err(Error::InvalidArgument("no decoders selected".into()));
        }
        if let SigmaRule::Fixed(s) = self.sigma_rule {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "fixed sigma must be finite and nonnegative, got {s}"
                )));
            }
        }
        Ok(())
    }

    pub fn calibration_options(&self) -> CalibrationOptions {
        CalibrationOptions {
            confidence: self.confidence,
            method: self.calibration_method,
            mc_samples: self.mc_samples,
            seed: derive_seed(self.base_seed, CALIBRATION_STREAM),
        }
    }

    pub fn matrix_seed(&self) -> u64 {
        derive_seed(self.base_seed, MATRIX_STREAM)
    }

    pub fn trial_seed(&self, trial_index: usize) -> u64 {
        derive_seed(self.base_seed, trial_index as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderOutcome {
    pub decoder: DecoderKind,
    pub err: f64,
    pub rho_ideal: f64,
    pub rho_oracle: f64,
    pub converged: bool,
    pub reprojected: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: usize,
    pub seed: u64,
    pub sigma: f64,
    /// Support size of the gross-error vector actually applied.
    pub gross_errors: usize,
    pub err_ideal: f64,
    pub err_oracle: f64,
    pub outcomes: Vec<DecoderOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderSummary {
    pub decoder: DecoderKind,
    pub median_rho_ideal: f64,
    pub mean_rho_ideal: f64,
    pub median_rho_oracle: f64,
    pub mean_rho_oracle: f64,
    pub trials_used: usize,
    pub trials_excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub trials: usize,
    pub decoders: Vec<DecoderSummary>,
    pub config: Option<ExperimentConfig>,
}

impl SummaryStats {
    pub fn decoder(&self, kind: DecoderKind) -> Option<&DecoderSummary> {
        self.decoders.iter().find(|d| d.decoder == kind)
    }
}

/// `err / baseline`, with `0/0 = 1` and `x/0 = ∞`.
pub fn ratio(err: f64, baseline: f64) -> f64 {
    if baseline == 0.0 {
        if err == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        err / baseline
    }
}

fn snap(err: f64) -> f64 {
    if err < ZERO_ERROR {
        0.0
    } else {
        err
    }
}

/// Builds the coding matrix named by the configuration.
pub fn generate_matrix(config: &ExperimentConfig) -> Result<CodingMatrix> {
    let seed = config.matrix_seed();
    match config.matrix_kind {
        MatrixKind::GaussianOrthonormal => gen_gaussian_orthonormal(config.m, config.n, seed),
        MatrixKind::PartialFourier => gen_partial_fourier(config.m, config.n, seed),
        MatrixKind::Explicit => Err(Error::InvalidArgument(
            "explicit matrices must be supplied, not generated".into(),
        )),
    }
}

/// Coding matrix plus its scale-free thresholds, shared by all trials.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub matrix: CodingMatrix,
    pub thresholds: UnitCalibration,
}

impl Experiment {
    pub fn prepare(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let matrix = generate_matrix(&config)?;
        Self::with_matrix(config, matrix)
    }

    pub fn with_matrix(config: ExperimentConfig, matrix: CodingMatrix) -> Result<Self> {
        config.validate()?;
        if matrix.m() != config.m || matrix.n() != config.n {
            return Err(Error::Shape(format!(
                "matrix is {}x{}, configuration expects {}x{}",
                matrix.m(),
                matrix.n(),
                config.m,
                config.n
            )));
        }
        let thresholds = calibrate_unit(&matrix, &config.calibration_options())?;
        Ok(Experiment {
            config,
            matrix,
            thresholds,
        })
    }

    pub fn run_trial(&self, trial_index: usize) -> Result<TrialRecord> {
        let config = &self.config;
        let matrix = &self.matrix;
        let seed = config.trial_seed(trial_index);
        let mut rng = rng_from_seed(seed);

        let x = normal_vector(&mut rng, config.n, 1.0);
        let codeword = encode(matrix, &Signal::new(x.clone())?)?;
        let eligible: Vec<usize> = (0..config.m)
            .filter(|&i| codeword[i].abs() >= MIN_FLIP_MAGNITUDE)
            .collect();
        let k = config.k();
        if eligible.len() < k {
            return Err(Error::InvalidArgument(format!(
                "only {} nonzero codeword entries for {k} gross errors",
                eligible.len()
            )));
        }
        let mut support: Vec<usize> = sample(&mut rng, eligible.len(), k)
            .into_iter()
            .map(|i| eligible[i])
            .collect();
        support.sort_unstable();

        let sigma = match config.sigma_rule {
            SigmaRule::MedianAbsOver16 => sigma_convention(&codeword)?,
            SigmaRule::Fixed(s) => s,
        };
        let noise = normal_vector(&mut rng, config.m, sigma);
        let mut plan = CorruptionPlan::sign_flips(support, noise.clone(), sigma)?;
        let y = corrupt(&codeword, &mut plan, CorruptionMode::SignFlip)?;
        let gross_errors = plan.gross_error().iter().filter(|v| **v != 0.0).count();

        // Knowing e exactly leaves Aᵀ(y − e) = x + Aᵀz.
        let err_ideal = snap(matrix.a().tr_mul(&noise).norm());
        let err_oracle = snap((oracle_ls(matrix, &y, plan.gross_support())? - &x).norm());

        let report = self.thresholds.report(sigma)?;
        let mut outcomes = Vec::with_capacity(config.decoders.len());
        for &kind in &config.decoders {
            let mut dc = match kind {
                DecoderKind::Socp => DecoderConfig::socp(report.eps),
                DecoderKind::Lp => DecoderConfig::lp(report.lambdas.clone()),
            };
            if config.reproject {
                dc = dc.with_reprojection(sigma);
            }
            dc.solver_tol = config.solver_tol;
            let res = decode(matrix, &y, &dc)?;
            let err = snap((&res.x_hat - &x).norm());
            outcomes.push(DecoderOutcome {
                decoder: kind,
                err,
                rho_ideal: ratio(err, err_ideal),
                rho_oracle: ratio(err, err_oracle),
                converged: res.diagnostics.converged,
                reprojected: res.reprojected,
                iterations: res.diagnostics.iterations,
            });
        }
        Ok(TrialRecord {
            trial_index,
            seed,
            sigma,
            gross_errors,
            err_ideal,
            err_oracle,
            outcomes,
        })
    }

    /// All trials, in parallel, ordered by index.
    pub fn run(&self) -> Result<(Vec<TrialRecord>, SummaryStats)> {
        let records: Vec<TrialRecord> = (0..self.config.trials)
            .into_par_iter()
            .map(|i| self.run_trial(i))
            .collect::<Result<_>>()?;
        let mut summary = summarize(&records)?;
        summary.config = Some(self.config.clone());
        Ok((records, summary))
    }
}

/// One trial against `matrix`, calibrating thresholds first. Prefer
/// [`Experiment`] when running many trials.
pub fn run_trial(
    matrix: &CodingMatrix,
    config: &ExperimentConfig,
    trial_index: usize,
) -> Result<TrialRecord> {
    Experiment::with_matrix(config.clone(), matrix.clone())?.run_trial(trial_index)
}

/// Generates the matrix, calibrates once and runs every trial, honouring
/// `ROBUSTCODE_THREADS`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<(Vec<TrialRecord>, SummaryStats)> {
    with_thread_cap(|| Experiment::prepare(config.clone())?.run())
}

/// Runs `f` inside a pool capped by `ROBUSTCODE_THREADS`, if set.
pub fn with_thread_cap<T: Send>(f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match std::env::var("ROBUSTCODE_THREADS") {
        Ok(v) => {
            let threads: usize = v.trim().parse().map_err(|_| {
                Error::InvalidArgument(format!(
                    "ROBUSTCODE_THREADS must be a positive integer, got '{v}'"
                ))
            })?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            pool.install(f)
        }
        Err(_) => f(),
    }
}

/// Per-decoder medians and means over converged trials.
pub fn summarize(records: &[TrialRecord]) -> Result<SummaryStats> {
    let first = records
        .first()
        .ok_or_else(|| Error::InvalidArgument("no trial records".into()))?;
    let mut decoders = Vec::new();
    for kind in first.outcomes.iter().map(|o| o.decoder) {
        let used: Vec<&DecoderOutcome> = records
            .iter()
            .flat_map(|r| r.outcomes.iter())
            .filter(|o| o.decoder == kind && o.converged)
            .collect();
        let total = records
            .iter()
            .flat_map(|r| r.outcomes.iter())
            .filter(|o| o.decoder == kind)
            .count();
        let ideal: Vec<f64> = used.iter().map(|o| o.rho_ideal).collect();
        let oracle: Vec<f64> = used.iter().map(|o| o.rho_oracle).collect();
        let nan_if_empty = |v: Option<f64>| v.unwrap_or(f64::NAN);
        decoders.push(DecoderSummary {
            decoder: kind,
            median_rho_ideal: nan_if_empty(median(&ideal)),
            mean_rho_ideal: nan_if_empty(mean(&ideal)),
            median_rho_oracle: nan_if_empty(median(&oracle)),
            mean_rho_oracle: nan_if_empty(mean(&oracle)),
            trials_used: used.len(),
            trials_excluded: total - used.len(),
        });
    }
    Ok(SummaryStats {
        trials: records.len(),
        decoders,
        config: None,
    })
}

fn fmt_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// `trials.csv`: one row per (trial, decoder).
pub fn write_trials_csv<W: Write>(w: W, records: &[TrialRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER.split(','))?;
    for r in records {
        for o in &r.outcomes {
            out.write_record([
                r.trial_index.to_string(),
                r.seed.to_string(),
                o.decoder.name().to_string(),
                fmt_real(o.err),
                fmt_real(r.err_ideal),
                fmt_real(r.err_oracle),
                fmt_real(o.rho_ideal),
                fmt_real(o.rho_oracle),
                o.converged.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Writes `trials.csv`, `summary.json` and `config.json` into `dir`.
pub fn write_outputs(
    dir: &Path,
    config: &ExperimentConfig,
    records: &[TrialRecord],
    summary: &SummaryStats,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_trials_csv(fs::File::create(dir.join("trials.csv"))?, records)?;
    fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(summary)? + "\n",
    )?;
    fs::write(
        dir.join("config.json"),
        serde_json::to_string_pretty(config)? + "\n",
    )?;
    Ok(())
}

/// One parsed row of `trials.csv`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct CsvRow {
    pub trial: usize,
    pub seed: u64,
    pub decoder: String,
    pub err: f64,
    pub err_ideal: f64,
    pub err_oracle: f64,
    pub rho_ideal: f64,
    pub rho_oracle: f64,
    pub converged: bool,
}

pub fn read_trials_csv<R: std::io::Read>(r: R) -> Result<Vec<CsvRow>> {
    let mut rows = Vec::new();
    for row in csv::Reader::from_reader(r).deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}
