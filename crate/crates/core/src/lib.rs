//! Robust decoding of real-valued block codes.
//!
//! A block `x ∈ ℝⁿ` is sent as the codeword `A x ∈ ℝᵐ` (`A` with orthonormal
//! columns). The channel adds a sparse vector of gross errors `e` and a dense
//! vector of small errors `z`. The decoders recover `x` by ℓ1 minimization
//! over the gross-error estimate, constrained either by an ℓ2 ball (second
//! order cone program) or by per-coordinate bounds (linear program, a
//! Dantzig-selector form).

pub mod bench;
pub mod calibration;
pub mod decoders;
pub mod error;
pub mod io;
pub mod linalg;
pub mod matrixgen;
pub mod model;
pub mod rip;
pub mod rng;
pub mod solver;
pub mod stats;

pub use error::{Error, Result};
