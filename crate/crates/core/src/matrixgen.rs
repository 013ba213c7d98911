//! Coding-matrix generators and the orthonormal complement basis.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::linalg::{householder_full_qr, orthonormality_defect};
use crate::model::{CodingMatrix, MatrixKind};
use crate::rng::{normal_matrix, rng_from_seed};

/// Salt separating the frequency-selection stream from other uses of a seed.
const FOURIER_SALT: u64 = 0x5F0F_F0F5;

fn check_redundancy(m: usize, n: usize) -> Result<()> {
    if n == 0 || m <= n {
        return Err(Error::NeedRedundancy { m, n });
    }
    Ok(())
}

/// Splits the full orthogonal factor of `x` into `(A, Q)`.
fn split_orthogonal(x: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (m, n) = x.shape();
    let full = householder_full_qr(x).q;
    (
        full.columns(0, n).into_owned(),
        full.columns(n, m - n).into_owned(),
    )
}

/// Orthonormalized m×n standard-normal sample.
pub fn gen_gaussian_orthonormal(m: usize, n: usize, seed: u64) -> Result<CodingMatrix> {
    check_redundancy(m, n)?;
    let x = normal_matrix(&mut rng_from_seed(seed), m, n);
    let (a, q) = split_orthogonal(&x);
    Ok(CodingMatrix::from_parts(
        a,
        q,
        MatrixKind::GaussianOrthonormal,
        seed,
    ))
}

/// The sorted frequencies selected by [`gen_partial_fourier`] for a seed.
pub fn fourier_frequencies(m: usize, n: usize, seed: u64) -> Result<Vec<usize>> {
    check_redundancy(m, n)?;
    if !n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "partial Fourier needs an even column count (cosine/sine pairs), got n = {n}"
        )));
    }
    // Frequencies 1..=floor((m-1)/2): DC and Nyquist excluded.
    let available = (m - 1) / 2;
    let pairs = n / 2;
    if pairs > available {
        return Err(Error::InvalidArgument(format!(
            "{pairs} frequency pairs requested but only {available} available for m = {m}"
        )));
    }
    let mut rng = rng_from_seed(seed ^ FOURIER_SALT);
    let mut freqs: Vec<usize> = sample(&mut rng, available, pairs)
        .into_iter()
        .map(|i| i + 1)
        .collect();
    freqs.sort_unstable();
    Ok(freqs)
}

/// Real partial-DFT coding matrix: `n/2` random frequencies, each
/// contributing a cosine and a sine column, orthonormalized.
pub fn gen_partial_fourier(m: usize, n: usize, seed: u64) -> Result<CodingMatrix> {
    let freqs = fourier_frequencies(m, n, seed)?;
    let mut x = DMatrix::zeros(m, n);
    for (j, &f) in freqs.iter().enumerate() {
        for t in 0..m {
            let phase = 2.0 * PI * ((f * t) % m) as f64 / m as f64;
            x[(t, 2 * j)] = phase.cos();
            x[(t, 2 * j + 1)] = phase.sin();
        }
    }
    let (a, q) = split_orthogonal(&x);
    Ok(CodingMatrix::from_parts(
        a,
        q,
        MatrixKind::PartialFourier,
        seed,
    ))
}

/// Orthonormal basis of the orthogonal complement of the range of `a`.
pub fn complement_basis(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (m, n) = a.shape();
    check_redundancy(m, n)?;
    let defect = orthonormality_defect(a);
    if defect > 1e-8 {
        return Err(Error::NotOrthonormal(defect));
    }
    Ok(split_orthogonal(a).1)
}

/// Wraps a user-supplied encoder, computing its complement basis.
pub fn explicit_matrix(a: DMatrix<f64>) -> Result<CodingMatrix> {
    let q = complement_basis(&a)?;
    CodingMatrix::new(a, q, MatrixKind::Explicit, 0)
}
