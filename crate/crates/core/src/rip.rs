//! Restricted extremal singular values, isometry constants and restricted
//! orthogonality constants by brute-force subset enumeration, plus numeric
//! checks of the recovery inequalities built on them.
//!
//! For `Φ ∈ ℝ^{r×m}`, `a_k` and `b_k` are the smallest and largest singular
//! values over all `k`-column submatrices, `δ_k = max(1 − a_k², b_k² − 1)`,
//! and `θ_{k,k′}` is the largest spectral norm of `Φ_Tᵀ Φ_{T′}` over
//! disjoint `|T| = k`, `|T′| = k′`.

use std::collections::BTreeMap;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::select_columns;
use crate::rng::{derive_seed, rng_from_seed};

pub const DEFAULT_SUBSET_BUDGET: u128 = 2_000_000;

/// Slack allowed on every checked inequality.
const CHECK_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    /// Every subset, refusing when the count exceeds `budget`.
    Exact { budget: u128 },
    /// `samples` random subsets per size; results are bounds, not values.
    Sampled { samples: usize, seed: u64 },
}

impl Default for SearchMode {
    fn default() -> Self {
        SearchMode::Exact {
            budget: DEFAULT_SUBSET_BUDGET,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RipReport {
    pub k_max: usize,
    /// `a[k-1] = a_k`.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub delta: Vec<f64>,
    /// Keyed `"k,k'"` for every `k + k′ <= k_max`.
    pub theta: BTreeMap<String, f64>,
    pub scale: f64,
    /// False when produced by sampling.
    pub certified: bool,
}

impl RipReport {
    pub fn a_k(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.a.get(i).copied())
    }

    pub fn b_k(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.b.get(i).copied())
    }

    pub fn delta_k(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.delta.get(i).copied())
    }

    pub fn theta(&self, k: usize, kp: usize) -> Option<f64> {
        self.theta.get(&theta_key(k, kp)).copied()
    }
}

fn theta_key(k: usize, kp: usize) -> String {
    format!("{k},{kp}")
}

/// `C(n, k)` without overflow for the sizes of interest.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

fn check_budget(required: u128, budget: u128) -> Result<()> {
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    Ok(())
}

/// Extreme singular values of `phi[:, cols]`; zero is the smallest when the
/// submatrix has more columns than rows.
fn subset_extremes(phi: &DMatrix<f64>, cols: &[usize]) -> (f64, f64) {
    let sv = select_columns(phi, cols).singular_values();
    let hi = sv.max();
    let lo = if cols.len() > phi.nrows() {
        0.0
    } else {
        sv.min()
    };
    (lo, hi)
}

fn fold_extremes(acc: (f64, f64), x: (f64, f64)) -> (f64, f64) {
    (acc.0.min(x.0), acc.1.max(x.1))
}

const EMPTY: (f64, f64) = (f64::INFINITY, f64::NEG_INFINITY);

fn extremes_for_size(phi: &DMatrix<f64>, k: usize, mode: SearchMode) -> (f64, f64) {
    let m = phi.ncols();
    match mode {
        SearchMode::Exact { .. } => (0..=m - k)
            .into_par_iter()
            .map(|first| {
                (first + 1..m).combinations(k - 1).fold(EMPTY, |acc, rest| {
                    let mut cols = Vec::with_capacity(k);
                    cols.push(first);
                    cols.extend(rest);
                    fold_extremes(acc, subset_extremes(phi, &cols))
                })
            })
            .reduce(|| EMPTY, fold_extremes),
        SearchMode::Sampled { samples, seed } => {
            let mut rng = rng_from_seed(derive_seed(seed, k as u64));
            let subsets: Vec<Vec<usize>> = (0..samples)
                .map(|_| {
                    let mut s = sample(&mut rng, m, k).into_vec();
                    s.sort_unstable();
                    s
                })
                .collect();
            subsets
                .par_iter()
                .map(|s| subset_extremes(phi, s))
                .reduce(|| EMPTY, fold_extremes)
        }
    }
}

fn check_k(k_max: usize, m: usize) -> Result<()> {
    if k_max == 0 || k_max > m {
        return Err(Error::InvalidArgument(format!(
            "k_max must lie in 1..={m}, got {k_max}"
        )));
    }
    Ok(())
}

/// `(a_k, b_k)` for `k = 1..=k_max`, returned as two vectors indexed `k-1`.
pub fn extremal_singular_values(phi: &DMatrix<f64>, k_max: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    extremal_singular_values_with(phi, k_max, SearchMode::default())
}

/// As [`extremal_singular_values`]. In sampled mode `a_k` is an upper bound
/// and `b_k` a lower bound on the exact values.
pub fn extremal_singular_values_with(
    phi: &DMatrix<f64>,
    k_max: usize,
    mode: SearchMode,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = phi.ncols();
    check_k(k_max, m)?;
    if let SearchMode::Exact { budget } = mode {
        check_budget((1..=k_max).map(|k| binomial(m, k)).sum(), budget)?;
    }
    let (a, b) = (1..=k_max).map(|k| extremes_for_size(phi, k, mode)).unzip();
    Ok((a, b))
}

fn block_norm(gram: &DMatrix<f64>, t: &[usize], tp: &[usize]) -> f64 {
    let block = DMatrix::from_fn(t.len(), tp.len(), |i, j| gram[(t[i], tp[j])]);
    block.singular_values().max()
}

fn theta_from_gram(gram: &DMatrix<f64>, k: usize, kp: usize, mode: SearchMode) -> f64 {
    let m = gram.ncols();
    match mode {
        SearchMode::Exact { .. } => {
            let firsts: Vec<Vec<usize>> = (0..m).combinations(k).collect();
            firsts
                .par_iter()
                .map(|t| {
                    let rest: Vec<usize> = (0..m).filter(|i| !t.contains(i)).collect();
                    rest.iter()
                        .copied()
                        .combinations(kp)
                        .map(|tp| block_norm(gram, t, &tp))
                        .fold(0.0, f64::max)
                })
                .reduce(|| 0.0, f64::max)
        }
        SearchMode::Sampled { samples, seed } => {
            let mut rng = rng_from_seed(derive_seed(seed, (1 << 32) + (k * m + kp) as u64));
            let pairs: Vec<(Vec<usize>, Vec<usize>)> = (0..samples)
                .map(|_| {
                    let s = sample(&mut rng, m, k + kp).into_vec();
                    (s[..k].to_vec(), s[k..].to_vec())
                })
                .collect();
            pairs
                .par_iter()
                .map(|(t, tp)| block_norm(gram, t, tp))
                .reduce(|| 0.0, f64::max)
        }
    }
}

/// `θ_{k,k′}(Φ)`.
pub fn restricted_orthogonality(phi: &DMatrix<f64>, k: usize, kp: usize) -> Result<f64> {
    restricted_orthogonality_with(phi, k, kp, SearchMode::default())
}

pub fn restricted_orthogonality_with(
    phi: &DMatrix<f64>,
    k: usize,
    kp: usize,
    mode: SearchMode,
) -> Result<f64> {
    let m = phi.ncols();
    if k == 0 || kp == 0 || k + kp > m {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= k, k' and k + k' <= {m}, got ({k}, {kp})"
        )));
    }
    if let SearchMode::Exact { budget } = mode {
        check_budget(binomial(m, k) * binomial(m - k, kp), budget)?;
    }
    Ok(theta_from_gram(&phi.tr_mul(phi), k, kp, mode))
}

/// Full report for `scale · phi`: `a, b, δ` for `k <= k_max` and `θ` for
/// every `k + k′ <= k_max`.
pub fn compute_report(
    phi: &DMatrix<f64>,
    k_max: usize,
    scale: f64,
    mode: SearchMode,
) -> Result<RipReport> {
    let m = phi.ncols();
    check_k(k_max, m)?;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "scale must be positive, got {scale}"
        )));
    }
    let pairs: Vec<(usize, usize)> = (1..k_max)
        .flat_map(|k| (k..=k_max - k).map(move |kp| (k, kp)))
        .collect();
    if let SearchMode::Exact { budget } = mode {
        let singular: u128 = (1..=k_max).map(|k| binomial(m, k)).sum();
        let ortho: u128 = pairs
            .iter()
            .map(|&(k, kp)| binomial(m, k) * binomial(m - k, kp))
            .sum();
        check_budget(singular + ortho, budget)?;
    }
    let scaled = phi * scale;
    let (a, b) = extremal_singular_values_with(&scaled, k_max, mode)?;
    let delta = a
        .iter()
        .zip(&b)
        .map(|(lo, hi)| (1.0 - lo * lo).max(hi * hi - 1.0))
        .collect();
    let gram = scaled.tr_mul(&scaled);
    let mut theta = BTreeMap::new();
    for (k, kp) in pairs {
        let value = theta_from_gram(&gram, k, kp, mode);
        theta.insert(theta_key(k, kp), value);
        theta.insert(theta_key(kp, k), value);
    }
    Ok(RipReport {
        k_max,
        a,
        b,
        delta,
        theta,
        scale,
        certified: matches!(mode, SearchMode::Exact { .. }),
    })
}

fn support_size(x: &DVector<f64>) -> usize {
    x.iter().filter(|v| **v != 0.0).count()
}

/// Checks `‖x̃ − x‖₂ <= √6 ε / (a_{3k} − b_{2k}/√2)` for `k`-sparse `x`
/// under the hypotheses `‖x̃‖₁ <= ‖x‖₁`, `‖Φx̃ − Φx‖₂ <= 2ε`.
///
/// Hypotheses are accepted with a relative slack of `1e-7` so that
/// iterates from an interior-point solve qualify.
pub fn check_recovery_lemma(
    phi: &DMatrix<f64>,
    x: &DVector<f64>,
    x_tilde: &DVector<f64>,
    eps: f64,
) -> Result<Verdict> {
    let m = phi.ncols();
    if x.len() != m || x_tilde.len() != m {
        return Err(Error::Shape(format!("vectors must have length {m}")));
    }
    if !(eps >= 0.0) {
        return Err(Error::InvalidArgument("eps must be nonnegative".into()));
    }
    let hyp_tol = 1e-7;
    let l1 = x.lp_norm(1);
    let tube = (phi * (x_tilde - x)).norm();
    if x_tilde.lp_norm(1) > l1 * (1.0 + hyp_tol) + hyp_tol * 1e-3
        || tube > 2.0 * eps * (1.0 + hyp_tol) + hyp_tol * 1e-3
    {
        return Ok(Verdict::NotApplicable);
    }
    let k = support_size(x).max(1);
    let k3 = (3 * k).min(m);
    let (a, b) = extremal_singular_values(phi, k3)?;
    let denom = a[k3 - 1] - b[(2 * k).min(m) - 1] / 2f64.sqrt();
    if denom <= 0.0 {
        return Ok(Verdict::NotApplicable);
    }
    let bound = 6f64.sqrt() * eps / denom;
    Ok(if (x_tilde - x).norm() <= bound + CHECK_SLACK {
        Verdict::Pass
    } else {
        Verdict::Fail
    })
}

/// `k′` largest-magnitude positions of `h` outside `t0`, lowest index first
/// among ties.
pub fn largest_outside(h: &DVector<f64>, t0: &[usize], kp: usize) -> Vec<usize> {
    let mut outside: Vec<usize> = (0..h.len()).filter(|i| !t0.contains(i)).collect();
    outside.sort_by(|&i, &j| h[j].abs().total_cmp(&h[i].abs()).then(i.cmp(&j)));
    outside.truncate(kp);
    outside.sort_unstable();
    outside
}

/// Checks both cone inequalities used by the Dantzig-form analysis:
///
/// `‖h_{T01}‖ <= ‖Φ_{T01}ᵀΦh‖ / a²_{k+k′} + θ_{k′,k+k′} ‖h_{T0ᶜ}‖₁ / (a²_{k+k′} √k′)`
/// and `‖h‖² <= ‖h_{T01}‖² + ‖h_{T0ᶜ}‖₁² / k′`.
pub fn check_ds_lemma(
    phi: &DMatrix<f64>,
    h: &DVector<f64>,
    t0: &[usize],
    kp: usize,
) -> Result<Verdict> {
    let m = phi.ncols();
    let k = t0.len();
    if h.len() != m {
        return Err(Error::Shape(format!(
            "h has length {}, expected {m}",
            h.len()
        )));
    }
    if kp == 0 || k + kp > m {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= k' and k + k' <= {m}"
        )));
    }
    if let Some(&bad) = t0.iter().find(|&&i| i >= m) {
        return Err(Error::IndexOutOfRange { index: bad, len: m });
    }
    if t0.iter().duplicates().next().is_some() {
        return Err(Error::InvalidArgument("T0 has repeated indices".into()));
    }
    let t1 = largest_outside(h, t0, kp);
    let mut t01: Vec<usize> = t0.iter().copied().chain(t1).collect();
    t01.sort_unstable();

    let (a, _) = extremal_singular_values(phi, k + kp)?;
    let a2 = a[k + kp - 1].powi(2);
    if a2 <= 0.0 {
        return Ok(Verdict::NotApplicable);
    }
    // The remaining blocks have at most k′ entries each; fewer when the
    // complement of T01 is short.
    let tail = kp.min(m - k - kp);
    let theta = if tail == 0 {
        0.0
    } else {
        restricted_orthogonality(phi, tail, k + kp)?
    };

    let h01 = DVector::from_iterator(t01.len(), t01.iter().map(|&i| h[i]));
    let phi_h = phi * h;
    let corr = select_columns(phi, &t01).tr_mul(&phi_h).norm();
    let off_l1: f64 = (0..m).filter(|i| !t0.contains(i)).map(|i| h[i].abs()).sum();

    let first = corr / a2 + theta * off_l1 / (a2 * (kp as f64).sqrt()) - h01.norm();
    let second = h01.norm_squared() + off_l1 * off_l1 / kp as f64 - h.norm_squared();
    Ok(if first >= -CHECK_SLACK && second >= -CHECK_SLACK {
        Verdict::Pass
    } else {
        Verdict::Fail
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TheoremKind {
    Socp,
    Lp,
}

/// SOCP: `δ_{3k} + δ_{2k}/2 < (m/n − 1)/2`; LP: `δ_{3k} + δ_{2k} < m/n − 1`.
/// `report` must be computed for `√(m/n) Aᵀ`.
pub fn check_theorem_hypothesis(
    report: &RipReport,
    k: usize,
    m: usize,
    n: usize,
    which: TheoremKind,
) -> Result<bool> {
    if n == 0 || m <= n {
        return Err(Error::NeedRedundancy { m, n });
    }
    if k == 0 || 3 * k > report.k_max {
        return Err(Error::InvalidArgument(format!(
            "report reaches k = {}, hypothesis needs 3k = {}",
            report.k_max,
            3 * k
        )));
    }
    let d2 = report.delta[2 * k - 1];
    let d3 = report.delta[3 * k - 1];
    let ratio = m as f64 / n as f64 - 1.0;
    Ok(match which {
        TheoremKind::Socp => d3 + 0.5 * d2 < 0.5 * ratio,
        TheoremKind::Lp => d3 + d2 < ratio,
    })
}
