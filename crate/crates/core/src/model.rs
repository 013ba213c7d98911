//! Channel model `y = A x + e + z`: domain types and the encode/corrupt
//! pipeline.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{max_abs, orthonormality_defect};

/// Tolerance used when validating orthonormality of stored matrices.
pub const ORTHO_TOL: f64 = 1e-10;

/// An information block `x` of `n` finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal(DVector<f64>);

impl Signal {
    pub fn new(values: DVector<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument(
                "signal must have length >= 1".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "signal entries must be finite".into(),
            ));
        }
        Ok(Signal(values))
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(values))
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    GaussianOrthonormal,
    PartialFourier,
    Explicit,
}

impl MatrixKind {
    pub fn to_byte(self) -> u8 {
        match self {
            MatrixKind::GaussianOrthonormal => 0,
            MatrixKind::PartialFourier => 1,
            MatrixKind::Explicit => 2,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(MatrixKind::GaussianOrthonormal),
            1 => Some(MatrixKind::PartialFourier),
            2 => Some(MatrixKind::Explicit),
            _ => None,
        }
    }
}

/// The m×n encoder `A` (orthonormal columns) together with an orthonormal
/// basis `Q` of the orthogonal complement of its range.
#[derive(Debug, Clone, PartialEq)]
pub struct CodingMatrix {
    a: DMatrix<f64>,
    q: DMatrix<f64>,
    kind: MatrixKind,
    seed: u64,
}

impl CodingMatrix {
    /// Builds a coding matrix and checks every structural invariant.
    pub fn new(a: DMatrix<f64>, q: DMatrix<f64>, kind: MatrixKind, seed: u64) -> Result<Self> {
        let (m, n) = a.shape();
        if n == 0 || m <= n {
            return Err(Error::NeedRedundancy { m, n });
        }
        if q.shape() != (m, m - n) {
            return Err(Error::Shape(format!(
                "complement basis is {}x{}, expected {}x{}",
                q.nrows(),
                q.ncols(),
                m,
                m - n
            )));
        }
        let cm = CodingMatrix { a, q, kind, seed };
        let defect = cm.orthogonality_defect();
        if defect > ORTHO_TOL {
            return Err(Error::NotOrthonormal(defect));
        }
        Ok(cm)
    }

    /// Skips validation; callers guarantee the invariants by construction.
    pub(crate) fn from_parts(
        a: DMatrix<f64>,
        q: DMatrix<f64>,
        kind: MatrixKind,
        seed: u64,
    ) -> Self {
        debug_assert_eq!(a.nrows(), q.nrows());
        debug_assert_eq!(a.ncols() + q.ncols(), a.nrows());
        CodingMatrix { a, q, kind, seed }
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Codeword length.
    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    /// Information block length.
    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    /// Largest entry of `[A|Q]ᵀ[A|Q] − I`.
    pub fn orthogonality_defect(&self) -> f64 {
        let (m, n) = self.a.shape();
        let mut full = DMatrix::zeros(m, m);
        full.columns_mut(0, n).copy_from(&self.a);
        full.columns_mut(n, m - n).copy_from(&self.q);
        orthonormality_defect(&full)
    }

    /// Largest entry of `QᵀA`.
    pub fn cross_defect(&self) -> f64 {
        max_abs(&self.q.tr_mul(&self.a))
    }

    /// The projector `QQᵀ` onto the complement of the range of `A`.
    pub fn complement_projector(&self) -> DMatrix<f64> {
        &self.q * self.q.transpose()
    }
}

/// Sparse gross errors `e` (support plus values) and dense noise `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionPlan {
    gross_support: Vec<usize>,
    gross_values: Vec<f64>,
    noise: DVector<f64>,
    sigma: f64,
}

impl CorruptionPlan {
    /// Plan for additive gross errors; every value must be nonzero so that
    /// the implied `e` is exactly `support.len()`-sparse.
    pub fn new(
        gross_support: Vec<usize>,
        gross_values: Vec<f64>,
        noise: DVector<f64>,
        sigma: f64,
    ) -> Result<Self> {
        if gross_values.len() != gross_support.len() {
            return Err(Error::Shape(format!(
                "{} gross values for {} support indices",
                gross_values.len(),
                gross_support.len()
            )));
        }
        if gross_values.iter().any(|v| *v == 0.0 || !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "gross values must be finite and nonzero".into(),
            ));
        }
        Self::check_common(&gross_support, &noise, sigma)?;
        Ok(CorruptionPlan {
            gross_support,
            gross_values,
            noise,
            sigma,
        })
    }

    /// Plan for sign-flip corruption. The magnitudes are not known until the
    /// codeword is seen; [`corrupt`] records them.
    pub fn sign_flips(gross_support: Vec<usize>, noise: DVector<f64>, sigma: f64) -> Result<Self> {
        Self::check_common(&gross_support, &noise, sigma)?;
        let gross_values = vec![0.0; gross_support.len()];
        Ok(CorruptionPlan {
            gross_support,
            gross_values,
            noise,
            sigma,
        })
    }

    fn check_common(support: &[usize], noise: &DVector<f64>, sigma: f64) -> Result<()> {
        let m = noise.len();
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "gross support must be strictly increasing".into(),
            ));
        }
        if let Some(&last) = support.last() {
            if last >= m {
                return Err(Error::IndexOutOfRange {
                    index: last,
                    len: m,
                });
            }
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(
                "sigma must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }

    pub fn gross_support(&self) -> &[usize] {
        &self.gross_support
    }

    pub fn gross_values(&self) -> &[f64] {
        &self.gross_values
    }

    pub fn noise(&self) -> &DVector<f64> {
        &self.noise
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Number of gross errors `k`.
    pub fn k(&self) -> usize {
        self.gross_support.len()
    }

    /// The dense length-m gross error vector `e`.
    pub fn gross_error(&self) -> DVector<f64> {
        let mut e = DVector::zeros(self.noise.len());
        for (&i, &v) in self.gross_support.iter().zip(&self.gross_values) {
            e[i] = v;
        }
        e
    }
}

/// The received word `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedWord(DVector<f64>);

impl ReceivedWord {
    pub fn new(values: DVector<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "received word entries must be finite".into(),
            ));
        }
        Ok(ReceivedWord(values))
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorruptionMode {
    /// `y_i = −(Ax)_i + z_i` on the gross support.
    SignFlip,
    /// `y = Ax + e + z`.
    Additive,
}

/// Computes the codeword `A x`.
pub fn encode(matrix: &CodingMatrix, signal: &Signal) -> Result<DVector<f64>> {
    if signal.len() != matrix.n() {
        return Err(Error::Shape(format!(
            "signal has length {}, matrix has {} columns",
            signal.len(),
            matrix.n()
        )));
    }
    Ok(matrix.a() * signal.values())
}

/// Passes a codeword through the channel described by `plan`.
///
/// In [`CorruptionMode::SignFlip`] the implied gross errors `−2(Ax)_i` are
/// written back into `plan`.
pub fn corrupt(
    codeword: &DVector<f64>,
    plan: &mut CorruptionPlan,
    mode: CorruptionMode,
) -> Result<ReceivedWord> {
    let m = codeword.len();
    if plan.noise.len() != m {
        return Err(Error::Shape(format!(
            "noise has length {}, codeword has {}",
            plan.noise.len(),
            m
        )));
    }
    if let Some(&bad) = plan.gross_support.iter().find(|&&i| i >= m) {
        return Err(Error::IndexOutOfRange { index: bad, len: m });
    }
    if mode == CorruptionMode::SignFlip {
        for (slot, &i) in plan.gross_values.iter_mut().zip(&plan.gross_support) {
            *slot = -2.0 * codeword[i];
        }
    }
    let mut y = codeword + &plan.noise;
    for (&i, &v) in plan.gross_support.iter().zip(&plan.gross_values) {
        match mode {
            CorruptionMode::SignFlip => y[i] = -codeword[i] + plan.noise[i],
            CorruptionMode::Additive => y[i] += v,
        }
    }
    ReceivedWord::new(y)
}
