//! Independent reference implementations used by the integration tests.
//! None of these share code with the library's solvers.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// `min ‖e‖₁` s.t. `lower <= g e <= upper`, by vertex enumeration.
///
/// In each orthant the objective is linear and the feasible set is pointed,
/// so an optimum sits where `m` independent constraints from
/// `{e_i = 0} ∪ {g_j e = lower_j} ∪ {g_j e = upper_j}` are active.
pub fn box_l1_oracle(g: &DMatrix<f64>, lower: &DVector<f64>, upper: &DVector<f64>) -> Option<f64> {
    let (p, m) = g.shape();
    let mut best: Option<f64> = None;
    // Each row is inactive (0), at its lower face (1) or at its upper face (2).
    let mut choice = vec![0u8; p];
    loop {
        let active: Vec<(usize, f64)> = choice
            .iter()
            .enumerate()
            .filter_map(|(j, &c)| match c {
                1 => Some((j, lower[j])),
                2 => Some((j, upper[j])),
                _ => None,
            })
            .collect();
        if active.len() <= m {
            for zeros in combinations(m, m - active.len()) {
                let mut sys = DMatrix::zeros(m, m);
                let mut rhs = DVector::zeros(m);
                for (row, &(j, v)) in active.iter().enumerate() {
                    sys.row_mut(row).copy_from(&g.row(j));
                    rhs[row] = v;
                }
                for (off, &i) in zeros.iter().enumerate() {
                    sys[(active.len() + off, i)] = 1.0;
                }
                let Some(e) = sys.lu().solve(&rhs) else {
                    continue;
                };
                if !e.iter().all(|v| v.is_finite()) {
                    continue;
                }
                let ge = g * &e;
                let scale = 1.0 + e.amax();
                let feasible = (0..p)
                    .all(|j| ge[j] >= lower[j] - 1e-9 * scale && ge[j] <= upper[j] + 1e-9 * scale);
                if feasible {
                    let obj = e.lp_norm(1);
                    if best.is_none_or(|b| obj < b) {
                        best = Some(obj);
                    }
                }
            }
        }
        // Next choice vector in base 3.
        let mut idx = 0;
        loop {
            if idx == p {
                return best;
            }
            choice[idx] += 1;
            if choice[idx] < 3 {
                break;
            }
            choice[idx] = 0;
            idx += 1;
        }
    }
}

/// `min ‖e‖₁` s.t. `‖b − g e‖₂ <= eps`, by exact enumeration of supports
/// and sign patterns.
///
/// Some optimum has a support `S` on which `g_S` has full column rank. For
/// its sign pattern `s` it is the minimiser of `sᵀe_S` over the ellipsoid
/// `‖b − g_S e_S‖ <= eps`, which has the closed form
/// `e0 − ρ M⁻¹s / √(sᵀM⁻¹s)`, `M = g_Sᵀg_S`, `ρ² = eps² − ‖b − g_S e0‖²`.
pub fn ball_l1_oracle(g: &DMatrix<f64>, b: &DVector<f64>, eps: f64) -> f64 {
    let (p, m) = g.shape();
    if b.norm() <= eps {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for size in 1..=p.min(m) {
        for support in combinations(m, size) {
            let gs = DMatrix::from_fn(p, size, |i, j| g[(i, support[j])]);
            let mtx = gs.tr_mul(&gs);
            let Some(chol) = mtx.clone().cholesky() else {
                continue;
            };
            if jacobi_eigenvalues(&mtx)
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min)
                < 1e-10
            {
                continue;
            }
            let e0 = chol.solve(&gs.tr_mul(b));
            let res2 = (b - &gs * &e0).norm_squared();
            let rho2 = eps * eps - res2;
            if rho2 < 0.0 {
                continue;
            }
            let rho = rho2.sqrt();
            for mask in 0..(1u32 << size) {
                let s = DVector::from_fn(size, |i, _| if mask >> i & 1 == 1 { -1.0 } else { 1.0 });
                let minv_s = chol.solve(&s);
                let q = s.dot(&minv_s);
                let e = &e0 - &minv_s * (rho / q.sqrt());
                let consistent = (0..size).all(|i| e[i] * s[i] >= -1e-12);
                if consistent {
                    best = best.min(e.lp_norm(1));
                }
            }
        }
    }
    best
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut a = a.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].powi(2))
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[(i, i)]).collect()
}

/// Exact `(a_k, b_k)` of `phi` from Jacobi eigenvalues of Gram submatrices.
pub fn extremal_by_gram(phi: &DMatrix<f64>, k: usize) -> (f64, f64) {
    let gram = phi.tr_mul(phi);
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for t in combinations(phi.ncols(), k) {
        let sub = DMatrix::from_fn(k, k, |i, j| gram[(t[i], t[j])]);
        for ev in jacobi_eigenvalues(&sub) {
            lo = lo.min(ev.max(0.0).sqrt());
            hi = hi.max(ev.max(0.0).sqrt());
        }
    }
    (lo, hi)
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
