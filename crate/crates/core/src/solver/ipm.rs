//! Primal-dual interior-point engine for
//!
//! ```text
//! minimize  ‖e‖₁   subject to   G e ∈ K
//! ```
//!
//! where `K` is either a box `{v : lower <= v <= upper}` or a Euclidean ball
//! `{v : ‖center − v‖₂ <= radius}`. The ℓ1 objective is linearized with an
//! epigraph variable `u >= |e|`, giving a conic program over the nonnegative
//! orthant (plus one second-order cone for the ball). Iterates follow
//! Mehrotra's predictor-corrector scheme with Nesterov–Todd scaling.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::soc::{self, NtScaling};
use super::{SolveDiagnostics, ToleranceConfig};

const STEP_FRACTION: f64 = 0.99;

#[derive(Debug, Clone)]
pub(crate) enum Image {
    Box {
        lower: DVector<f64>,
        upper: DVector<f64>,
    },
    Ball {
        center: DVector<f64>,
        radius: f64,
    },
}

impl Image {
    fn scaled(&self, factor: f64) -> Image {
        match self {
            Image::Box { lower, upper } => Image::Box {
                lower: lower * factor,
                upper: upper * factor,
            },
            Image::Ball { center, radius } => Image::Ball {
                center: center * factor,
                radius: radius * factor,
            },
        }
    }

    fn magnitude(&self) -> f64 {
        match self {
            Image::Box { lower, upper } => lower.amax().max(upper.amax()),
            Image::Ball { center, radius } => center.amax().max(*radius),
        }
    }

    /// Constraint violation of the image point `ge`.
    pub(crate) fn violation(&self, ge: &DVector<f64>) -> f64 {
        match self {
            Image::Box { lower, upper } => (0..ge.len())
                .map(|i| (lower[i] - ge[i]).max(ge[i] - upper[i]).max(0.0))
                .fold(0.0, f64::max),
            Image::Ball { center, radius } => ((center - ge).norm() - radius).max(0.0),
        }
    }
}

/// Slack/dual vectors laid out as `[lin1 (m) | lin2 (m) | image part]`.
struct Layout {
    m: usize,
    p: usize,
    ball: bool,
}

impl Layout {
    fn n_linear(&self) -> usize {
        if self.ball {
            2 * self.m
        } else {
            2 * self.m + 2 * self.p
        }
    }

    fn degree(&self) -> f64 {
        (self.n_linear() + usize::from(self.ball)) as f64
    }

    fn soc_range(&self) -> std::ops::Range<usize> {
        2 * self.m..2 * self.m + self.p + 1
    }
}

struct Scaling {
    /// `sqrt(z/s)` on the linear entries.
    lin: Vec<f64>,
    soc: Option<NtScaling>,
}

pub(crate) struct Engine<'a> {
    g: &'a DMatrix<f64>,
    gtg: Option<DMatrix<f64>>,
    image: Image,
    layout: Layout,
    h: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct EngineOutput {
    pub e: DVector<f64>,
    pub diagnostics: SolveDiagnostics,
}

impl<'a> Engine<'a> {
    pub(crate) fn new(g: &'a DMatrix<f64>, image: Image) -> Self {
        let (p, m) = g.shape();
        let ball = matches!(image, Image::Ball { .. });
        let gtg = ball.then(|| g.tr_mul(g));
        Engine {
            g,
            gtg,
            image,
            layout: Layout { m, p, ball },
            h: Vec::new(),
        }
    }

    pub(crate) fn solve(mut self, tol: &ToleranceConfig) -> EngineOutput {
        let m = self.layout.m;
        let zero = DVector::zeros(m);
        let g0 = DVector::zeros(self.layout.p);
        if self.image.violation(&g0) == 0.0 {
            return EngineOutput {
                e: zero,
                diagnostics: SolveDiagnostics {
                    iterations: 0,
                    primal_objective: 0.0,
                    max_constraint_violation: 0.0,
                    converged: true,
                },
            };
        }

        // Normalize the data so iterates are O(1); rescale on exit.
        let scale = self.image.magnitude();
        let original = std::mem::replace(
            &mut self.image,
            Image::Box {
                lower: g0.clone(),
                upper: g0,
            },
        );
        self.image = original.scaled(1.0 / scale);
        self.h = self.build_h();

        let (e_scaled, iterations, converged) = self.iterate(tol, scale);
        let e = e_scaled * scale;
        let max_constraint_violation = original.violation(&(self.g * &e));
        EngineOutput {
            diagnostics: SolveDiagnostics {
                iterations,
                primal_objective: e.lp_norm(1),
                max_constraint_violation,
                converged: converged && max_constraint_violation <= tol.feasibility,
            },
            e,
        }
    }

    fn build_h(&self) -> Vec<f64> {
        let m = self.layout.m;
        let mut h = vec![0.0; 2 * m];
        match &self.image {
            Image::Box { lower, upper } => {
                h.extend(upper.iter());
                h.extend(lower.iter().map(|v| -v));
            }
            Image::Ball { center, radius } => {
                h.push(*radius);
                h.extend(center.iter());
            }
        }
        h
    }

    /// `F x` for `x = (e, u)`; `F` is the stacked constraint operator with
    /// `F x + s = h`.
    fn apply_f(&self, e: &DVector<f64>, u: &DVector<f64>) -> Vec<f64> {
        let m = self.layout.m;
        let mut out = Vec::with_capacity(self.h.len());
        out.extend((0..m).map(|i| e[i] - u[i]));
        out.extend((0..m).map(|i| -e[i] - u[i]));
        let ge = self.g * e;
        if self.layout.ball {
            out.push(0.0);
            out.extend(ge.iter());
        } else {
            out.extend(ge.iter());
            out.extend(ge.iter().map(|v| -v));
        }
        out
    }

    /// `Fᵀ y`, returned as `(e-part, u-part)`.
    fn apply_ft(&self, y: &[f64]) -> (DVector<f64>, DVector<f64>) {
        let (m, p) = (self.layout.m, self.layout.p);
        let image = if self.layout.ball {
            DVector::from_column_slice(&y[2 * m + 1..2 * m + 1 + p])
        } else {
            DVector::from_fn(p, |i, _| y[2 * m + i] - y[2 * m + p + i])
        };
        let gt = self.g.tr_mul(&image);
        let e = DVector::from_fn(m, |i, _| y[i] - y[m + i] + gt[i]);
        let u = DVector::from_fn(m, |i, _| -y[i] - y[m + i]);
        (e, u)
    }

    fn scaling(&self, s: &[f64], z: &[f64]) -> Scaling {
        let nl = self.layout.n_linear();
        let lin = (0..nl).map(|i| (z[i] / s[i]).sqrt()).collect();
        let soc = self.layout.ball.then(|| {
            let r = self.layout.soc_range();
            NtScaling::new(&s[r.clone()], &z[r])
        });
        Scaling { lin, soc }
    }

    fn apply_w(&self, sc: &Scaling, y: &[f64], inverse: bool) -> Vec<f64> {
        let mut out = vec![0.0; y.len()];
        for (k, w) in sc.lin.iter().enumerate() {
            out[k] = if inverse { y[k] / w } else { y[k] * w };
        }
        if let Some(nt) = &sc.soc {
            let r = self.layout.soc_range();
            if inverse {
                nt.apply_inv(&y[r.clone()], &mut out[r]);
            } else {
                nt.apply(&y[r.clone()], &mut out[r]);
            }
        }
        out
    }

    fn jprod(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let nl = self.layout.n_linear();
        let mut out = vec![0.0; u.len()];
        for k in 0..nl {
            out[k] = u[k] * v[k];
        }
        if self.layout.ball {
            let r = self.layout.soc_range();
            soc::jprod(&u[r.clone()], &v[r.clone()], &mut out[r]);
        }
        out
    }

    fn jdiv(&self, lambda: &[f64], r: &[f64]) -> Vec<f64> {
        let nl = self.layout.n_linear();
        let mut out = vec![0.0; r.len()];
        for k in 0..nl {
            out[k] = r[k] / lambda[k];
        }
        if self.layout.ball {
            let rg = self.layout.soc_range();
            soc::jdiv(&lambda[rg.clone()], &r[rg.clone()], &mut out[rg]);
        }
        out
    }

    fn identity(&self) -> Vec<f64> {
        let mut e = vec![1.0; self.h.len()];
        if self.layout.ball {
            let r = self.layout.soc_range();
            for v in &mut e[r.start + 1..r.end] {
                *v = 0.0;
            }
        }
        e
    }

    fn max_step(&self, x: &[f64], d: &[f64]) -> f64 {
        let nl = self.layout.n_linear();
        let mut alpha = f64::INFINITY;
        for k in 0..nl {
            if d[k] < 0.0 {
                alpha = alpha.min(-x[k] / d[k]);
            }
        }
        if self.layout.ball {
            let r = self.layout.soc_range();
            alpha = alpha.min(soc::max_step(&x[r.clone()], &d[r]));
        }
        alpha
    }

    /// Factorizes the reduced Newton matrix (e-block after eliminating u).
    fn factor(&self, sc: &Scaling) -> Option<(Cholesky<f64, nalgebra::Dyn>, Vec<f64>, Vec<f64>)> {
        let (m, p) = (self.layout.m, self.layout.p);
        let d1: Vec<f64> = sc.lin[..m].iter().map(|w| w * w).collect();
        let d2: Vec<f64> = sc.lin[m..2 * m].iter().map(|w| w * w).collect();
        let mut hmat = match &sc.soc {
            Some(nt) => {
                let beta2 = nt.beta * nt.beta;
                let coef = nt.tail_rank_one_coef();
                let v1 = DVector::from_column_slice(&nt.v[1..]);
                let gv = self.g.tr_mul(&v1);
                let mut hm = self.gtg.as_ref().expect("ball engine keeps GᵀG") * beta2;
                hm.ger(beta2 * coef, &gv, &gv, 1.0);
                hm
            }
            None => {
                let mut dg = self.g.clone();
                for i in 0..p {
                    let w3 = sc.lin[2 * m + i];
                    let w4 = sc.lin[2 * m + p + i];
                    let d = (w3 * w3 + w4 * w4).sqrt();
                    dg.row_mut(i).scale_mut(d);
                }
                dg.tr_mul(&dg)
            }
        };
        for i in 0..m {
            hmat[(i, i)] += 4.0 * d1[i] * d2[i] / (d1[i] + d2[i]);
        }
        let diag_max = (0..m)
            .map(|i| hmat[(i, i)])
            .fold(0.0f64, f64::max)
            .max(1e-300);
        let mut reg = 0.0;
        for _ in 0..6 {
            let mut trial = hmat.clone();
            if reg > 0.0 {
                for i in 0..m {
                    trial[(i, i)] += reg;
                }
            }
            if let Some(ch) = Cholesky::new(trial) {
                return Some((ch, d1, d2));
            }
            reg = if reg == 0.0 {
                1e-14 * diag_max
            } else {
                reg * 100.0
            };
        }
        None
    }

    /// Solves the Newton system for a given right-hand side `t` of the
    /// linearized complementarity condition.
    #[allow(clippy::too_many_arguments)]
    fn newton(
        &self,
        fac: &(Cholesky<f64, nalgebra::Dyn>, Vec<f64>, Vec<f64>),
        sc: &Scaling,
        rx: &(DVector<f64>, DVector<f64>),
        rz: &[f64],
        t: &[f64],
    ) -> (DVector<f64>, DVector<f64>, Vec<f64>, Vec<f64>) {
        let m = self.layout.m;
        let (ch, d1, d2) = fac;
        // rhs = -rx - Fᵀ W (W rz + t)
        let wrz = self.apply_w(sc, rz, false);
        let inner: Vec<f64> = wrz.iter().zip(t).map(|(a, b)| a + b).collect();
        let winner = self.apply_w(sc, &inner, false);
        let (fe, fu) = self.apply_ft(&winner);
        let re = -&rx.0 - fe;
        let ru = -&rx.1 - fu;
        let reduced = DVector::from_fn(m, |i, _| re[i] - (d2[i] - d1[i]) / (d1[i] + d2[i]) * ru[i]);
        let dxe = ch.solve(&reduced);
        let dxu = DVector::from_fn(m, |i, _| {
            (ru[i] - (d2[i] - d1[i]) * dxe[i]) / (d1[i] + d2[i])
        });
        let fdx = self.apply_f(&dxe, &dxu);
        let ds: Vec<f64> = rz.iter().zip(&fdx).map(|(r, f)| -r - f).collect();
        let inner2: Vec<f64> = fdx.iter().zip(rz).map(|(f, r)| f + r).collect();
        let w1 = self.apply_w(sc, &inner2, false);
        let sum: Vec<f64> = w1.iter().zip(t).map(|(a, b)| a + b).collect();
        let dz = self.apply_w(sc, &sum, false);
        (dxe, dxu, ds, dz)
    }

    /// Runs the predictor-corrector loop on the normalized problem.
    /// Returns the scaled `e`, the iteration count and the convergence flag.
    fn iterate(&self, tol: &ToleranceConfig, scale: f64) -> (DVector<f64>, usize, bool) {
        let m = self.layout.m;
        let nslack = self.h.len();
        let mut e = DVector::zeros(m);
        let mut u = DVector::from_element(m, 1.0);

        let fx = self.apply_f(&e, &u);
        let mut s: Vec<f64> = self.h.iter().zip(&fx).map(|(h, f)| h - f).collect();
        let nl = self.layout.n_linear();
        for v in &mut s[..nl] {
            *v = v.max(1.0);
        }
        if self.layout.ball {
            let r = self.layout.soc_range();
            let margin = soc::interior_margin(&s[r.clone()]);
            if margin < 1.0 {
                s[r.start] += 1.0 - margin;
            }
        }
        let mut z = self.identity();
        let ident = self.identity();
        let degree = self.layout.degree();

        let feas_scaled = tol.feasibility / scale;
        let mut best: Option<(DVector<f64>, f64)> = None;
        let mut iterations = 0;

        for iter in 0..=tol.max_iter {
            iterations = iter;
            let fx = self.apply_f(&e, &u);
            let rz: Vec<f64> = (0..nslack).map(|i| fx[i] + s[i] - self.h[i]).collect();
            let (fte, ftu) = self.apply_ft(&z);
            let rx = (fte, ftu.add_scalar(1.0));
            let gap: f64 = soc::dot(&s, &z);
            let pobj = u.sum();
            let dobj = -soc::dot(&self.h, &z);
            let ge = self.g * &e;
            let viol = self.image.violation(&ge);
            let l1 = e.lp_norm(1);
            let dres = rx.0.amax().max(rx.1.amax());
            let rel_gap = (pobj - dobj).abs().max(gap) / l1.max(dobj.abs()).max(1e-12);

            if viol <= feas_scaled && best.as_ref().is_none_or(|(_, b)| l1 < *b) {
                best = Some((e.clone(), l1));
            }
            if viol <= feas_scaled && dres <= tol.feasibility && rel_gap <= tol.objective_rel {
                return (e, iter, true);
            }
            if iter == tol.max_iter {
                break;
            }

            let sc = self.scaling(&s, &z);
            let lambda = self.apply_w(&sc, &s, false);
            let fac = match self.factor(&sc) {
                Some(f) => f,
                None => break,
            };

            // Predictor.
            let neg_lambda: Vec<f64> = lambda.iter().map(|v| -v).collect();
            let (_, _, ds_a, dz_a) = self.newton(&fac, &sc, &rx, &rz, &neg_lambda);
            let alpha_a = self
                .max_step(&s, &ds_a)
                .min(self.max_step(&z, &dz_a))
                .min(1.0);
            let s_a: Vec<f64> = s.iter().zip(&ds_a).map(|(a, d)| a + alpha_a * d).collect();
            let z_a: Vec<f64> = z.iter().zip(&dz_a).map(|(a, d)| a + alpha_a * d).collect();
            let mu = gap / degree;
            let sigma = (soc::dot(&s_a, &z_a) / gap).clamp(0.0, 1.0).powi(3);

            // Corrector.
            let ds_t = self.apply_w(&sc, &ds_a, false);
            let dz_t = self.apply_w(&sc, &dz_a, true);
            let ll = self.jprod(&lambda, &lambda);
            let cross = self.jprod(&ds_t, &dz_t);
            let rc: Vec<f64> = (0..nslack)
                .map(|i| -ll[i] - cross[i] + sigma * mu * ident[i])
                .collect();
            let t = self.jdiv(&lambda, &rc);
            let (dxe, dxu, ds, dz) = self.newton(&fac, &sc, &rx, &rz, &t);

            let alpha =
                (STEP_FRACTION * self.max_step(&s, &ds).min(self.max_step(&z, &dz))).min(1.0);
            if !(alpha > 1e-12) {
                break;
            }
            e.axpy(alpha, &dxe, 1.0);
            u.axpy(alpha, &dxu, 1.0);
            for i in 0..nslack {
                s[i] += alpha * ds[i];
                z[i] += alpha * dz[i];
            }
        }
        // Not certified: hand back the best feasible iterate seen, if any.
        match best {
            Some((b, _)) => (b, iterations, false),
            None => (e, iterations, false),
        }
    }
}
