//! Convex solvers for the two decoding programs:
//!
//! * [`solve_l1_ball`]: `min ‖e‖₁  s.t.  ‖b − G e‖₂ <= eps`
//! * [`solve_l1_box`]:  `min ‖e‖₁  s.t.  |b − G e|_i <= lam_i`
//!
//! Both run the same primal-dual interior-point engine; the ball variant
//! carries one second-order cone, the box variant is a pure LP.

mod ipm;
mod soc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use ipm::{Engine, Image};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Absolute bound on the returned point's constraint violation.
    pub feasibility: f64,
    /// Relative duality gap required to certify the objective.
    pub objective_rel: f64,
    pub max_iter: usize,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            feasibility: 1e-8,
            objective_rel: 1e-8,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    /// `‖ê‖₁` of the returned point.
    pub primal_objective: f64,
    /// Measured on the returned point, in the caller's units.
    pub max_constraint_violation: f64,
    pub converged: bool,
}

/// `min ‖e‖₁` subject to `‖b − g e‖₂ <= eps`.
///
/// With `eps == 0` the constraint is the affine set `g e = b`, which has no
/// interior; that case is delegated to the box solver with zero widths.
pub fn solve_l1_ball(
    g: &DMatrix<f64>,
    b: &DVector<f64>,
    eps: f64,
    tol: &ToleranceConfig,
) -> Result<(DVector<f64>, SolveDiagnostics)> {
    if b.len() != g.nrows() {
        return Err(Error::Shape(format!(
            "rhs has length {}, operator has {} rows",
            b.len(),
            g.nrows()
        )));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "eps must be finite and nonnegative, got {eps}"
        )));
    }
    if eps == 0.0 {
        return solve_l1_box(g, b, &DVector::zeros(b.len()), tol);
    }
    let out = Engine::new(
        g,
        Image::Ball {
            center: b.clone(),
            radius: eps,
        },
    )
    .solve(tol);
    Ok((out.e, out.diagnostics))
}

/// `min ‖e‖₁` subject to `|b − g e|_i <= lam_i` for every row `i`.
pub fn solve_l1_box(
    g: &DMatrix<f64>,
    b: &DVector<f64>,
    lam: &DVector<f64>,
    tol: &ToleranceConfig,
) -> Result<(DVector<f64>, SolveDiagnostics)> {
    if b.len() != g.nrows() || lam.len() != g.nrows() {
        return Err(Error::Shape(format!(
            "rhs/threshold lengths {}/{} do not match {} operator rows",
            b.len(),
            lam.len(),
            g.nrows()
        )));
    }
    if lam.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
        return Err(Error::InvalidArgument(
            "thresholds must be finite and nonnegative".into(),
        ));
    }
    let image = Image::Box {
        lower: b - lam,
        upper: b + lam,
    };
    let out = Engine::new(g, image).solve(tol);
    Ok((out.e, out.diagnostics))
}

/// Independent post-hoc feasibility measure for the ball program.
pub fn ball_violation(g: &DMatrix<f64>, b: &DVector<f64>, eps: f64, e: &DVector<f64>) -> f64 {
    ((b - g * e).norm() - eps).max(0.0)
}

/// Independent post-hoc feasibility measure for the box program.
pub fn box_violation(
    g: &DMatrix<f64>,
    b: &DVector<f64>,
    lam: &DVector<f64>,
    e: &DVector<f64>,
) -> f64 {
    let r = b - g * e;
    (0..r.len())
        .map(|i| (r[i].abs() - lam[i]).max(0.0))
        .fold(0.0, f64::max)
}
