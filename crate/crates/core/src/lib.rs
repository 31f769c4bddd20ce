//! Rearrangement calculus and log-weighted Hardy operators on the half-line.
//!
//! The library works with finitely-supported step functions held exactly
//! (breakpoints and values, no sampling), builds decreasing rearrangements
//! and running averages in closed form, evaluates the operator pair
//!
//! ```text
//! P f(t) = t^(-1/p0) ∫_0^t w(1 - log(s/t)) f(s) s^(1/p0 - 1) ds
//! Q f(t) = t^(-1/p1) ∫_t^∞ f(s) s^(1/p1 - 1) ds          (p1 = ∞: ∫_t^∞ f ds/s)
//! R = P + Q
//! ```
//!
//! for log-type weights `w`, and ships a set of verification suites that
//! replay the inequalities this operator calculus is designed to satisfy.
//!
//! Everything is deterministic: fixed summation orders, seeded generators,
//! no wall-clock or thread-count dependence in any reported number.

pub mod admissible;
pub mod calderon;
pub mod extreal;
mod logs;
pub mod norms;
pub mod quadrature;
pub mod rearrangement;
pub mod verify;

pub use admissible::{AdmissibleFunction, PhiDescription};
pub use calderon::{profile_grid, KernelSpec, OperatorInput, OperatorProfile};
pub use quadrature::{QuadratureError, QuadratureResult, Tolerance};
pub use rearrangement::{
    DecreasingStep, HyperbolicPiece, PiecewiseHyperbolic, SimpleFunction, StepFunction,
};
pub use verify::{
    deterministic_family, family_t_grid, seeded_staircases, support_t_grid, VerificationReport,
};

use thiserror::Error;

/// Input validation failure (malformed function, exponents out of range, …).
#[derive(Debug, Clone, Error, PartialEq)]
pub enum InvalidInput {
    #[error("invalid function: {0}")]
    Function(String),
    #[error("invalid kernel spec: {0}")]
    Spec(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

/// Log-spaced grid with `n` points covering `[lo, hi]`, endpoints included.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(
        lo > 0.0 && hi > lo && n >= 2,
        "log_grid needs 0 < lo < hi, n >= 2"
    );
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
