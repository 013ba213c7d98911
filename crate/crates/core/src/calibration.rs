//! Noise-level convention and threshold selection for the two decoders.
//!
//! With `z ~ N(0, σ² I)`, `‖Qᵀz‖₂ / σ` is a chi variable with `m − n`
//! degrees of freedom and `(QQᵀz)_i` is normal with standard deviation
//! `s_i = σ √(QQᵀ)_ii`. Both thresholds are therefore linear in `σ`; the
//! scale-free factors live in [`UnitCalibration`] and can be reused for
//! any noise level.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::model::CodingMatrix;
use crate::rng::{derive_seed, normal_matrix, rng_from_seed};
use crate::stats::{empirical_quantile, median};

/// Noise draws per Monte-Carlo work unit. Each chunk owns a derived seed,
/// so results do not depend on how chunks are scheduled.
const MC_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMethod {
    Analytic,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    pub confidence: f64,
    pub method: CalibrationMethod,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            confidence: 0.95,
            method: CalibrationMethod::MonteCarlo,
            mc_samples: 10_000,
            seed: 0,
        }
    }
}

impl CalibrationOptions {
    fn validate(&self) -> Result<()> {
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "confidence must lie in (0, 1), got {}",
                self.confidence
            )));
        }
        if self.method == CalibrationMethod::MonteCarlo && self.mc_samples == 0 {
            return Err(Error::InvalidArgument("mc_samples must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub eps: f64,
    pub lambdas: DVector<f64>,
    pub s: DVector<f64>,
    pub lambda_scalar: f64,
    pub confidence: f64,
    pub method: CalibrationMethod,
    pub mc_samples: usize,
    /// Coordinates whose complement row vanishes (`s_i = 0`); their
    /// thresholds are zero.
    pub zero_variance: Vec<usize>,
}

/// Thresholds at unit noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitCalibration {
    /// `ε / σ`.
    pub eps_factor: f64,
    pub lambda_scalar: f64,
    /// `s_i / σ = √(QQᵀ)_ii`.
    pub s_unit: DVector<f64>,
    pub options: CalibrationOptions,
}

impl UnitCalibration {
    pub fn eps(&self, sigma: f64) -> f64 {
        self.eps_factor * sigma
    }

    pub fn report(&self, sigma: f64) -> Result<CalibrationReport> {
        check_sigma(sigma)?;
        let s = &self.s_unit * sigma;
        let lambdas = &s * self.lambda_scalar;
        let zero_variance = (0..self.s_unit.len())
            .filter(|&i| self.s_unit[i] == 0.0)
            .collect();
        Ok(CalibrationReport {
            eps: self.eps(sigma),
            lambdas,
            s,
            lambda_scalar: self.lambda_scalar,
            confidence: self.options.confidence,
            method: self.options.method,
            mc_samples: self.options.mc_samples,
            zero_variance,
        })
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "sigma must be finite and nonnegative, got {sigma}"
        )));
    }
    Ok(())
}

/// `median(|Ax|) / 16`: keeps roughly the first three binary digits of a
/// typical codeword entry reliable.
pub fn sigma_convention(codeword: &DVector<f64>) -> Result<f64> {
    let abs: Vec<f64> = codeword.iter().map(|v| v.abs()).collect();
    median(&abs)
        .map(|med| med / 16.0)
        .ok_or_else(|| Error::InvalidArgument("empty codeword".into()))
}

/// `√(QQᵀ)_ii`, the per-coordinate standard deviation of `QQᵀz` at unit noise.
pub fn unit_deviations(matrix: &CodingMatrix) -> DVector<f64> {
    let q = matrix.q();
    DVector::from_fn(matrix.m(), |i, _| q.row(i).norm_squared().sqrt())
}

/// Unit-noise Monte-Carlo draws: `‖Qᵀz‖₂` and `max_i |(QQᵀz)_i| / s_i`.
pub fn monte_carlo_statistics(
    matrix: &CodingMatrix,
    s_unit: &DVector<f64>,
    samples: usize,
    seed: u64,
) -> (Vec<f64>, Vec<f64>) {
    let q = matrix.q();
    let m = matrix.m();
    let chunks = samples.div_ceil(MC_CHUNK);
    let per_chunk: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = MC_CHUNK.min(samples - c * MC_CHUNK);
            let z: DMatrix<f64> =
                normal_matrix(&mut rng_from_seed(derive_seed(seed, c as u64)), m, len);
            let qtz = q.tr_mul(&z);
            let proj = q * &qtz;
            let norms = (0..len).map(|j| qtz.column(j).norm()).collect();
            let sups = (0..len)
                .map(|j| {
                    (0..m)
                        .filter(|&i| s_unit[i] > 0.0)
                        .map(|i| proj[(i, j)].abs() / s_unit[i])
                        .fold(0.0, f64::max)
                })
                .collect();
            (norms, sups)
        })
        .collect();
    let mut norms = Vec::with_capacity(samples);
    let mut sups = Vec::with_capacity(samples);
    for (n, s) in per_chunk {
        norms.extend(n);
        sups.extend(s);
    }
    (norms, sups)
}

/// Computes both scale-free thresholds for `matrix`.
pub fn calibrate_unit(
    matrix: &CodingMatrix,
    options: &CalibrationOptions,
) -> Result<UnitCalibration> {
    options.validate()?;
    let s_unit = unit_deviations(matrix);
    let r = matrix.m() - matrix.n();
    let (eps_factor, lambda_scalar) = match options.method {
        CalibrationMethod::Analytic => {
            let chi2 =
                ChiSquared::new(r as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            (
                chi2.inverse_cdf(options.confidence).sqrt(),
                (2.0 * (matrix.m() as f64).ln()).sqrt(),
            )
        }
        CalibrationMethod::MonteCarlo => {
            let (norms, sups) =
                monte_carlo_statistics(matrix, &s_unit, options.mc_samples, options.seed);
            let q = |v: &[f64]| empirical_quantile(v, options.confidence).expect("nonempty sample");
            (q(&norms), q(&sups))
        }
    };
    Ok(UnitCalibration {
        eps_factor,
        lambda_scalar,
        s_unit,
        options: *options,
    })
}

/// ℓ2 radius making `‖Qᵀz‖₂ <= ε` hold with probability `confidence`.
pub fn calibrate_eps(
    matrix: &CodingMatrix,
    sigma: f64,
    options: &CalibrationOptions,
) -> Result<f64> {
    check_sigma(sigma)?;
    Ok(calibrate_unit(matrix, options)?.eps(sigma))
}

/// Per-coordinate bounds `λ_i = λ s_i` making
/// `sup_i |(QQᵀz)_i| / s_i <= λ` hold with probability `confidence`.
pub fn calibrate_lambdas(
    matrix: &CodingMatrix,
    sigma: f64,
    options: &CalibrationOptions,
) -> Result<CalibrationReport> {
    check_sigma(sigma)?;
    calibrate_unit(matrix, options)?.report(sigma)
}
