//! Reconstruction procedures: ideal and oracle least squares, the SOCP and
//! LP decoders, and the support-refit (reprojection) step.
//!
//! Both convex decoders work on the gross-error estimate `ê` alone; the
//! block is then recovered by least squares on the corrected word,
//! `x̂ = Aᵀ(y − ê)`, and the small-error estimate is `ẑ = QQᵀ(y − ê)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{least_squares, select_columns, select_rows};
use crate::model::{CodingMatrix, ReceivedWord};
use crate::solver::{solve_l1_ball, solve_l1_box, SolveDiagnostics, ToleranceConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    Socp,
    Lp,
}

impl DecoderKind {
    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::Socp => "socp",
            DecoderKind::Lp => "lp",
        }
    }
}

impl std::str::FromStr for DecoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "socp" => Ok(DecoderKind::Socp),
            "lp" => Ok(DecoderKind::Lp),
            other => Err(Error::InvalidArgument(format!("unknown decoder '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderConfig {
    pub kind: DecoderKind,
    /// ℓ2 radius for the SOCP decoder.
    pub eps: f64,
    /// Per-coordinate bounds for the LP decoder.
    pub lambdas: DVector<f64>,
    pub reproject: bool,
    /// Gross-error support threshold used by reprojection (normally σ).
    pub support_threshold: f64,
    pub solver_tol: ToleranceConfig,
}

impl DecoderConfig {
    pub fn socp(eps: f64) -> Self {
        DecoderConfig {
            kind: DecoderKind::Socp,
            eps,
            lambdas: DVector::zeros(0),
            reproject: false,
            support_threshold: 0.0,
            solver_tol: ToleranceConfig::default(),
        }
    }

    pub fn lp(lambdas: DVector<f64>) -> Self {
        DecoderConfig {
            kind: DecoderKind::Lp,
            eps: 0.0,
            lambdas,
            reproject: false,
            support_threshold: 0.0,
            solver_tol: ToleranceConfig::default(),
        }
    }

    pub fn with_reprojection(mut self, support_threshold: f64) -> Self {
        self.reproject = true;
        self.support_threshold = support_threshold;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub x_hat: DVector<f64>,
    pub e_hat: DVector<f64>,
    pub z_hat: DVector<f64>,
    pub diagnostics: SolveDiagnostics,
    pub reprojected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reprojection {
    pub e_refit: DVector<f64>,
    pub x_hat: DVector<f64>,
    /// False when the restricted system was rank deficient and the input
    /// estimate was kept unchanged.
    pub refit: bool,
}

fn check_word(matrix: &CodingMatrix, y: &ReceivedWord) -> Result<()> {
    if y.len() != matrix.m() {
        return Err(Error::Shape(format!(
            "received word has length {}, matrix has {} rows",
            y.len(),
            matrix.m()
        )));
    }
    Ok(())
}

/// Least squares assuming no gross errors: `(AᵀA)⁻¹Aᵀy = Aᵀy`.
pub fn ideal_ls(matrix: &CodingMatrix, y: &ReceivedWord) -> Result<DVector<f64>> {
    check_word(matrix, y)?;
    Ok(matrix.a().tr_mul(y.values()))
}

/// Least squares after deleting the rows listed in `gross_support`.
pub fn oracle_ls(
    matrix: &CodingMatrix,
    y: &ReceivedWord,
    gross_support: &[usize],
) -> Result<DVector<f64>> {
    check_word(matrix, y)?;
    let m = matrix.m();
    let mut deleted = vec![false; m];
    for &i in gross_support {
        if i >= m {
            return Err(Error::IndexOutOfRange { index: i, len: m });
        }
        deleted[i] = true;
    }
    if gross_support.is_empty() {
        return ideal_ls(matrix, y);
    }
    let keep: Vec<usize> = (0..m).filter(|&i| !deleted[i]).collect();
    let a = select_rows(matrix.a(), &keep);
    let b = DVector::from_iterator(keep.len(), keep.iter().map(|&i| y.values()[i]));
    least_squares(&a, &b).ok_or(Error::OracleSingular)
}

/// `x̂ = Aᵀ(y − ê)`, `ẑ = Q Qᵀ(y − ê)`.
fn reconstruct(
    matrix: &CodingMatrix,
    y: &ReceivedWord,
    e_hat: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>) {
    let corrected = y.values() - e_hat;
    let x_hat = matrix.a().tr_mul(&corrected);
    let z_hat = matrix.q() * matrix.q().tr_mul(&corrected);
    (x_hat, z_hat)
}

fn finish(
    matrix: &CodingMatrix,
    y: &ReceivedWord,
    e_hat: DVector<f64>,
    diagnostics: SolveDiagnostics,
    config: &DecoderConfig,
) -> Result<DecodeResult> {
    let (e_hat, reprojected) = if config.reproject {
        let rp = reproject(matrix, y, &e_hat, config.support_threshold)?;
        (rp.e_refit, rp.refit)
    } else {
        (e_hat, false)
    };
    let (x_hat, z_hat) = reconstruct(matrix, y, &e_hat);
    Ok(DecodeResult {
        x_hat,
        e_hat,
        z_hat,
        diagnostics,
        reprojected,
    })
}

/// SOCP decoder: `ê = argmin ‖ẽ‖₁ s.t. ‖Qᵀ(y − ẽ)‖₂ <= ε`.
pub fn socp_decode(
    matrix: &CodingMatrix,
    y: &ReceivedWord,
    config: &DecoderConfig,
) -> Result<DecodeResult> {
    check_word(matrix, y)?;
    if config.kind != DecoderKind::Socp {
        return Err(Error::InvalidArgument(
            "socp_decode needs a Socp configuration".into(),
        ));
    }
    let qt = matrix.q().transpose();
    let b = &qt * y.values();
    let (e_hat, diag) = solve_l1_ball(&qt, &b, config.eps, &config.solver_tol)?;
    finish(matrix, y, e_hat, diag, config)
}

/// LP decoder: `ê = argmin ‖ẽ‖₁ s.t. |(QQᵀ(y − ẽ))_i| <= λ_i`.
pub fn lp_decode(
    matrix: &CodingMatrix,
    y: &ReceivedWord,
    config: &DecoderConfig,
) -> Result<DecodeResult> {
    check_word(matrix, y)?;
    if config.kind != DecoderKind::Lp {
        return Err(Error::InvalidArgument(
            "lp_decode needs an Lp configuration".into(),
        ));
    }
    if config.lambdas.len() != matrix.m() {
        return Err(Error::Shape(format!(
            "{} thresholds for codeword length {}",
            config.lambdas.len(),
            matrix.m()
        )));
    }
    let proj = matrix.complement_projector();
    let b = &proj * y.values();
    let (e_hat, diag) = solve_l1_box(&proj, &b, &config.lambdas, &config.solver_tol)?;
    finish(matrix, y, e_hat, diag, config)
}

pub fn decode(
    matrix: &CodingMatrix,
    y: &ReceivedWord,
    config: &DecoderConfig,
) -> Result<DecodeResult> {
    match config.kind {
        DecoderKind::Socp => socp_decode(matrix, y, config),
        DecoderKind::Lp => lp_decode(matrix, y, config),
    }
}

/// Debiases an ℓ1 estimate: keeps `I = {i : |ê_i| > threshold}` and refits
/// `Qᵀy ≈ Qᵀ_I ẽ_I` by least squares.
pub fn reproject(
    matrix: &CodingMatrix,
    y: &ReceivedWord,
    e_hat: &DVector<f64>,
    support_threshold: f64,
) -> Result<Reprojection> {
    check_word(matrix, y)?;
    if e_hat.len() != matrix.m() {
        return Err(Error::Shape(format!(
            "estimate has length {}, expected {}",
            e_hat.len(),
            matrix.m()
        )));
    }
    if !(support_threshold >= 0.0) {
        return Err(Error::InvalidArgument(
            "support threshold must be nonnegative".into(),
        ));
    }
    let support: Vec<usize> = (0..e_hat.len())
        .filter(|&i| e_hat[i].abs() > support_threshold)
        .collect();
    let qt = matrix.q().transpose();
    let target = &qt * y.values();
    let restricted: DMatrix<f64> = select_columns(&qt, &support);
    let (e_refit, refit) = match least_squares(&restricted, &target) {
        Some(coef) => {
            let mut e = DVector::zeros(matrix.m());
            for (k, &i) in support.iter().enumerate() {
                e[i] = coef[k];
            }
            (e, true)
        }
        None => (e_hat.clone(), false),
    };
    let x_hat = matrix.a().tr_mul(&(y.values() - &e_refit));
    Ok(Reprojection {
        e_refit,
        x_hat,
        refit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixgen::{explicit_matrix, gen_gaussian_orthonormal};
    use crate::model::{corrupt, encode, CorruptionMode, CorruptionPlan, MatrixKind, Signal};
    use crate::rng::{normal_vector, rng_from_seed};

    fn word(v: DVector<f64>) -> ReceivedWord {
        ReceivedWord::new(v).unwrap()
    }

    #[test]
    fn ideal_inverts_noiseless_codeword() {
        let cm = gen_gaussian_orthonormal(10, 4, 1).unwrap();
        let x = normal_vector(&mut rng_from_seed(2), 4, 1.0);
        let y = word(cm.a() * &x);
        assert!((ideal_ls(&cm, &y).unwrap() - x).amax() < 1e-10);
    }

    #[test]
    fn ideal_discards_complement() {
        let cm = explicit_matrix(DMatrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap();
        assert_eq!(cm.kind(), MatrixKind::Explicit);
        let x = ideal_ls(&cm, &word(DVector::from_vec(vec![3.0, 7.0]))).unwrap();
        assert_eq!(x.as_slice(), &[3.0]);
    }

    #[test]
    fn oracle_with_empty_support_is_ideal() {
        let cm = gen_gaussian_orthonormal(8, 3, 4).unwrap();
        let y = word(normal_vector(&mut rng_from_seed(5), 8, 1.0));
        assert_eq!(oracle_ls(&cm, &y, &[]).unwrap(), ideal_ls(&cm, &y).unwrap());
    }

    #[test]
    fn oracle_excises_garbage_row() {
        let cm = gen_gaussian_orthonormal(8, 3, 6).unwrap();
        let x = normal_vector(&mut rng_from_seed(7), 3, 1.0);
        let mut y = cm.a() * &x;
        y[5] = 1234.5;
        let xo = oracle_ls(&cm, &word(y), &[5]).unwrap();
        assert!((xo - x).amax() < 1e-10);
    }

    #[test]
    fn oracle_matches_normal_equations() {
        let cm = gen_gaussian_orthonormal(8, 2, 8).unwrap();
        let y = normal_vector(&mut rng_from_seed(9), 8, 1.0);
        let support = [1, 4, 6];
        let xo = oracle_ls(&cm, &word(y.clone()), &support).unwrap();

        // Hand-assembled 2x2 normal equations over the surviving rows.
        let (mut g00, mut g01, mut g11, mut r0, mut r1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in [0usize, 2, 3, 5, 7] {
            let (a0, a1) = (cm.a()[(i, 0)], cm.a()[(i, 1)]);
            g00 += a0 * a0;
            g01 += a0 * a1;
            g11 += a1 * a1;
            r0 += a0 * y[i];
            r1 += a1 * y[i];
        }
        let det = g00 * g11 - g01 * g01;
        let expect = [(g11 * r0 - g01 * r1) / det, (g00 * r1 - g01 * r0) / det];
        assert!((xo[0] - expect[0]).abs() < 1e-10 && (xo[1] - expect[1]).abs() < 1e-10);
    }

    #[test]
    fn oracle_rejects_singular_system() {
        // Rows 1 and 2 carry all the information about the second column.
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 0.6, 0.0, 0.8, 0.0, 0.0]);
        let cm = explicit_matrix(a).unwrap();
        let y = word(DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]));
        assert!(matches!(
            oracle_ls(&cm, &y, &[1, 2]),
            Err(Error::OracleSingular)
        ));
    }

    fn planted(
        m: usize,
        n: usize,
        k: usize,
        seed: u64,
    ) -> (CodingMatrix, DVector<f64>, ReceivedWord, DVector<f64>) {
        let cm = gen_gaussian_orthonormal(m, n, seed).unwrap();
        let mut rng = rng_from_seed(seed + 1);
        let x = normal_vector(&mut rng, n, 1.0);
        let cw = encode(&cm, &Signal::new(x.clone()).unwrap()).unwrap();
        let support: Vec<usize> = (0..k)
            .map(|i| (i * 7 + 3) % m)
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut plan = CorruptionPlan::sign_flips(support, DVector::zeros(m), 0.0).unwrap();
        let y = corrupt(&cw, &mut plan, CorruptionMode::SignFlip).unwrap();
        (cm, x, y, plan.gross_error())
    }

    #[test]
    fn exact_recovery_without_noise() {
        let (cm, x, y, _) = planted(64, 32, 4, 10);
        for config in [
            DecoderConfig::socp(0.0),
            DecoderConfig::lp(DVector::zeros(64)),
        ] {
            let res = decode(&cm, &y, &config).unwrap();
            assert!(res.diagnostics.converged);
            assert!((&res.x_hat - &x).norm() / x.norm() <= 1e-6);
        }
    }

    #[test]
    fn inactive_lp_thresholds_give_ideal() {
        let (cm, _, y, _) = planted(16, 8, 1, 3);
        let b = cm.complement_projector() * y.values();
        let res = lp_decode(
            &cm,
            &y,
            &DecoderConfig::lp(DVector::from_element(16, b.amax())),
        )
        .unwrap();
        assert!(res.e_hat.iter().all(|v| *v == 0.0));
        assert_eq!(res.x_hat, ideal_ls(&cm, &y).unwrap());
    }

    #[test]
    fn decomposition_identity() {
        let (cm, _, y, _) = planted(24, 12, 2, 21);
        let res = socp_decode(&cm, &y, &DecoderConfig::socp(0.1)).unwrap();
        let recomposed = cm.a() * &res.x_hat + &res.z_hat + &res.e_hat;
        assert!((recomposed - y.values()).amax() < 1e-10);
        assert!(cm.a().tr_mul(&res.z_hat).amax() < 1e-10);
    }

    #[test]
    fn reprojection_of_zero_estimate() {
        let (cm, _, y, _) = planted(12, 6, 1, 4);
        let rp = reproject(&cm, &y, &DVector::zeros(12), 0.5).unwrap();
        assert!(rp.refit);
        assert!(rp.e_refit.iter().all(|v| *v == 0.0));
        assert!((rp.x_hat - ideal_ls(&cm, &y).unwrap()).amax() < 1e-14);
    }

    #[test]
    fn reprojection_keeps_exact_estimate() {
        let (cm, x, y, e) = planted(16, 8, 2, 5);
        let rp = reproject(&cm, &y, &e, 1e-3).unwrap();
        assert!(rp.refit);
        assert!((&rp.e_refit - &e).amax() < 1e-8);
        assert!((&rp.x_hat - &x).amax() < 1e-8);
    }

    #[test]
    fn reprojection_fixes_shrunken_estimate() {
        let (cm, _, y, e) = planted(8, 4, 1, 12);
        let shrunk = &e * 0.6;
        let rp = reproject(&cm, &y, &shrunk, 1e-6).unwrap();
        assert!((&rp.e_refit - &e).norm() <= (&shrunk - &e).norm());
    }

    #[test]
    fn reprojection_falls_back_when_underdetermined() {
        let (cm, _, y, _) = planted(8, 4, 1, 13);
        let dense = DVector::from_element(8, 1.0);
        let rp = reproject(&cm, &y, &dense, 0.5).unwrap();
        assert!(!rp.refit);
        assert_eq!(rp.e_refit, dense);
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let (cm, _, y, _) = planted(8, 4, 1, 14);
        assert!(socp_decode(&cm, &y, &DecoderConfig::lp(DVector::zeros(8))).is_err());
        assert!(lp_decode(&cm, &y, &DecoderConfig::socp(0.0)).is_err());
        assert!(lp_decode(&cm, &y, &DecoderConfig::lp(DVector::zeros(3))).is_err());
    }
}
