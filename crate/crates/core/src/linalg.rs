//! Dense helpers shared by the generators, decoders and RIP toolkit.

use nalgebra::{DMatrix, DVector};

/// Full orthogonal-triangular factorization `x = q * r` with `q` square.
#[derive(Debug, Clone)]
pub struct FullQr {
    /// m×m orthogonal factor.
    pub q: DMatrix<f64>,
    /// m×n upper-triangular factor with nonnegative diagonal.
    pub r: DMatrix<f64>,
}

/// Householder QR returning the complete m×m orthogonal factor.
///
/// The diagonal of `r` is forced nonnegative by flipping the matching
/// columns of `q`, which makes the factorization unique for full-rank input.
pub fn householder_full_qr(x: &DMatrix<f64>) -> FullQr {
    let (m, n) = x.shape();
    let mut r = x.clone();
    let steps = n.min(m.saturating_sub(1));
    let mut reflectors: Vec<Option<(Vec<f64>, f64)>> = Vec::with_capacity(steps);

    for j in 0..steps {
        let col = &r.as_slice()[j * m + j..(j + 1) * m];
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            reflectors.push(None);
            continue;
        }
        let alpha = if col[0] > 0.0 { -norm } else { norm };
        let mut v = col.to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        if vnorm2 == 0.0 {
            reflectors.push(None);
            continue;
        }
        let beta = 2.0 / vnorm2;
        {
            let data = r.as_mut_slice();
            for c in j..n {
                let colc = &mut data[c * m + j..(c + 1) * m];
                reflect(colc, &v, beta);
            }
        }
        r[(j, j)] = alpha;
        for i in j + 1..m {
            r[(i, j)] = 0.0;
        }
        reflectors.push(Some((v, beta)));
    }

    // q = H_0 H_1 ... H_{p-1}, accumulated right to left.
    let mut q = DMatrix::<f64>::identity(m, m);
    for (j, refl) in reflectors.iter().enumerate().rev() {
        if let Some((v, beta)) = refl {
            let data = q.as_mut_slice();
            for c in j..m {
                reflect(&mut data[c * m + j..(c + 1) * m], v, *beta);
            }
        }
    }

    for j in 0..n.min(m) {
        if r[(j, j)] < 0.0 {
            for c in j..n {
                r[(j, c)] = -r[(j, c)];
            }
            for i in 0..m {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    FullQr { q, r }
}

#[inline]
fn reflect(target: &mut [f64], v: &[f64], beta: f64) {
    let w: f64 = target.iter().zip(v).map(|(a, b)| a * b).sum();
    let coef = beta * w;
    for (t, vi) in target.iter_mut().zip(v) {
        *t -= coef * vi;
    }
}

/// Largest absolute entry of `aᵀa − I`.
pub fn orthonormality_defect(a: &DMatrix<f64>) -> f64 {
    let gram = a.tr_mul(a);
    let mut worst = 0.0f64;
    for j in 0..gram.ncols() {
        for i in 0..gram.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Least-squares solve of `a z ≈ b`; `None` when `a` is numerically rank
/// deficient or has more columns than rows.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let (rows, cols) = a.shape();
    if cols == 0 {
        return Some(DVector::zeros(0));
    }
    if rows < cols {
        return None;
    }
    let qr = a.clone().qr();
    let r = qr.r();
    let diag_max = (0..cols).map(|i| r[(i, i)].abs()).fold(0.0f64, f64::max);
    let diag_min = (0..cols)
        .map(|i| r[(i, i)].abs())
        .fold(f64::INFINITY, f64::min);
    if diag_max == 0.0 || diag_min <= 1e-10 * diag_max {
        return None;
    }
    let qtb = qr.q().tr_mul(b);
    r.solve_upper_triangular(&qtb)
}

/// Picks the rows listed in `keep` (in order).
pub fn select_rows(a: &DMatrix<f64>, keep: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(keep.len(), a.ncols(), |i, j| a[(keep[i], j)])
}

/// Picks the columns listed in `keep` (in order).
pub fn select_columns(a: &DMatrix<f64>, keep: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), keep.len(), |i, j| a[(i, keep[j])])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{normal_matrix, rng_from_seed};

    #[test]
    fn full_qr_reconstructs_input() {
        let x = normal_matrix(&mut rng_from_seed(11), 9, 4);
        let FullQr { q, r } = householder_full_qr(&x);
        assert!(orthonormality_defect(&q) < 1e-13);
        assert!(max_abs(&(&q * &r - &x)) < 1e-12);
        for j in 0..4 {
            assert!(r[(j, j)] >= 0.0);
            for i in j + 1..9 {
                assert_eq!(r[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn least_squares_rejects_rank_deficiency() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert!(least_squares(&a, &b).is_none());
    }

    #[test]
    fn least_squares_solves_consistent_system() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![2.0, -1.0, 1.0]);
        let z = least_squares(&a, &b).unwrap();
        assert!((z[0] - 2.0).abs() < 1e-12 && (z[1] + 1.0).abs() < 1e-12);
    }
}
