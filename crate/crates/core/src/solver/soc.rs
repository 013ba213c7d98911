//! Jordan algebra and Nesterov–Todd scaling for one second-order cone
//! `{(t, v) : t >= ‖v‖₂}`.

/// `u ∘ v = (uᵀv, u₀ v₁ + v₀ u₁)`.
pub(crate) fn jprod(u: &[f64], v: &[f64], out: &mut [f64]) {
    out[0] = dot(u, v);
    for i in 1..u.len() {
        out[i] = u[0] * v[i] + v[0] * u[i];
    }
}

/// Solves `lambda ∘ x = r` for `x`.
pub(crate) fn jdiv(lambda: &[f64], r: &[f64], out: &mut [f64]) {
    let det = det(lambda);
    let l0 = lambda[0];
    let tail_dot: f64 = lambda[1..].iter().zip(&r[1..]).map(|(a, b)| a * b).sum();
    let x0 = (l0 * r[0] - tail_dot) / det;
    out[0] = x0;
    for i in 1..lambda.len() {
        out[i] = (r[i] - x0 * lambda[i]) / l0;
    }
}

pub(crate) fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn tail_norm(u: &[f64]) -> f64 {
    u[1..].iter().map(|t| t * t).sum::<f64>().sqrt()
}

/// `u₀² − ‖u₁‖²`, factored for accuracy near the boundary.
pub(crate) fn det(u: &[f64]) -> f64 {
    let t = tail_norm(u);
    (u[0] - t) * (u[0] + t)
}

/// Distance of `u` from the cone boundary along the identity direction.
pub(crate) fn interior_margin(u: &[f64]) -> f64 {
    u[0] - tail_norm(u)
}

/// Largest `alpha >= 0` keeping `x + alpha d` in the cone (`x` interior).
/// Returns `f64::INFINITY` when the ray never leaves the cone.
pub(crate) fn max_step(x: &[f64], d: &[f64]) -> f64 {
    // f(alpha) = (x0 + alpha d0)^2 - ‖x1 + alpha d1‖^2 = a alpha^2 + 2 b alpha + c
    let a = d[0] * d[0] - d[1..].iter().map(|t| t * t).sum::<f64>();
    let b = x[0] * d[0] - x[1..].iter().zip(&d[1..]).map(|(p, q)| p * q).sum::<f64>();
    let c = det(x);
    smallest_positive_root(a, b, c)
}

fn smallest_positive_root(a: f64, b: f64, c: f64) -> f64 {
    if c <= 0.0 {
        return 0.0;
    }
    if a == 0.0 {
        return if b < 0.0 {
            -c / (2.0 * b)
        } else {
            f64::INFINITY
        };
    }
    let disc = b * b - a * c;
    if disc < 0.0 {
        return f64::INFINITY;
    }
    let root = disc.sqrt();
    let q = -(b + b.signum() * root);
    let mut best = f64::INFINITY;
    for r in [q / a, if q != 0.0 { c / q } else { f64::INFINITY }] {
        if r > 0.0 && r < best {
            best = r;
        }
    }
    best
}

/// Symmetric NT scaling with `W s = W⁻¹ z`. `v` is the Jordan square root
/// of the normalized scaling point, so `W⁻¹ = β⁻¹ (2 v vᵀ − J)`.
#[derive(Debug, Clone)]
pub(crate) struct NtScaling {
    pub beta: f64,
    pub v: Vec<f64>,
}

impl NtScaling {
    pub fn new(s: &[f64], z: &[f64]) -> Self {
        let sn = det(s).sqrt();
        let zn = det(z).sqrt();
        let sbar: Vec<f64> = s.iter().map(|t| t / sn).collect();
        let zbar: Vec<f64> = z.iter().map(|t| t / zn).collect();
        let gamma = ((1.0 + dot(&sbar, &zbar)) / 2.0).sqrt();
        let mut wbar = vec![0.0; s.len()];
        wbar[0] = (sbar[0] + zbar[0]) / (2.0 * gamma);
        for i in 1..s.len() {
            wbar[i] = (sbar[i] - zbar[i]) / (2.0 * gamma);
        }
        let denom = (2.0 * (wbar[0] + 1.0)).sqrt();
        let mut v = wbar;
        v[0] += 1.0;
        for t in v.iter_mut() {
            *t /= denom;
        }
        NtScaling {
            beta: (zn / sn).sqrt(),
            v,
        }
    }

    /// `out = W y = β (2 J v vᵀ J − J) y`.
    pub fn apply(&self, y: &[f64], out: &mut [f64]) {
        let mut vjy = self.v[0] * y[0];
        for i in 1..y.len() {
            vjy -= self.v[i] * y[i];
        }
        out[0] = self.beta * (2.0 * self.v[0] * vjy - y[0]);
        for i in 1..y.len() {
            out[i] = self.beta * (-2.0 * self.v[i] * vjy + y[i]);
        }
    }

    /// `out = W⁻¹ y = β⁻¹ (2 v vᵀ − J) y`.
    pub fn apply_inv(&self, y: &[f64], out: &mut [f64]) {
        let vy = dot(&self.v, y);
        out[0] = (2.0 * self.v[0] * vy - y[0]) / self.beta;
        for i in 1..y.len() {
            out[i] = (2.0 * self.v[i] * vy + y[i]) / self.beta;
        }
    }

    /// The trailing block of `W²` is `β² (I + c v₁ v₁ᵀ)`; returns `c`.
    pub fn tail_rank_one_coef(&self) -> f64 {
        4.0 * (1.0 + dot(&self.v, &self.v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interior(seed: u64, len: usize) -> Vec<f64> {
        // Deterministic interior point: tail pseudo-random, head dominates.
        let mut state = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        let mut tail: Vec<f64> = (1..len)
            .map(|_| {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect();
        let norm = tail.iter().map(|t| t * t).sum::<f64>().sqrt();
        let mut u = vec![norm + 0.3 + (seed % 3) as f64];
        u.append(&mut tail);
        u
    }

    #[test]
    fn scaling_maps_s_and_z_to_the_same_point() {
        for seed in 0..10 {
            let s = interior(seed, 6);
            let z = interior(seed + 100, 6);
            let w = NtScaling::new(&s, &z);
            let mut ws = vec![0.0; 6];
            let mut wiz = vec![0.0; 6];
            w.apply(&s, &mut ws);
            w.apply_inv(&z, &mut wiz);
            for i in 0..6 {
                assert!((ws[i] - wiz[i]).abs() < 1e-12, "{ws:?} vs {wiz:?}");
            }
            let mut back = vec![0.0; 6];
            w.apply_inv(&ws, &mut back);
            for i in 0..6 {
                assert!((back[i] - s[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn squared_scaling_tail_block() {
        let s = interior(4, 5);
        let z = interior(9, 5);
        let w = NtScaling::new(&s, &z);
        let c = w.tail_rank_one_coef();
        for j in 1..5 {
            let mut e = vec![0.0; 5];
            e[j] = 1.0;
            let mut tmp = vec![0.0; 5];
            let mut w2e = vec![0.0; 5];
            w.apply(&e, &mut tmp);
            w.apply(&tmp, &mut w2e);
            for i in 1..5 {
                let expect =
                    w.beta * w.beta * (if i == j { 1.0 } else { 0.0 } + c * w.v[i] * w.v[j]);
                assert!((w2e[i] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jdiv_inverts_jprod() {
        let l = interior(1, 4);
        let r = [0.3, -1.0, 2.0, 0.5];
        let mut x = [0.0; 4];
        let mut back = [0.0; 4];
        jdiv(&l, &r, &mut x);
        jprod(&l, &x, &mut back);
        for i in 0..4 {
            assert!((back[i] - r[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn max_step_hits_boundary() {
        let x = [2.0, 0.0, 0.0];
        let d = [-1.0, 1.0, 0.0];
        // (2 - a)^2 = a^2 -> a = 1
        assert!((max_step(&x, &d) - 1.0).abs() < 1e-15);
        assert_eq!(max_step(&x, &[1.0, 0.5, 0.0]), f64::INFINITY);
    }
}
