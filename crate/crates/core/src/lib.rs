//! Open-system dynamics for quantum systems linearly coupled to nonstationary
//! Gaussian baths.
//!
//! The bath correlation function is expanded as
//! `α(t,s) = Σ_j (Γ_j/2) e^{-Γ_j|t-s|} f_j(t) g_j*(s)`, and the reduced dynamics
//! is solved with four interchangeable formulations on a truncated
//! pseudo-Fock space of effective modes:
//!
//! * hierarchy of pure states (linear and Girsanov-normalized), driven by colored noise,
//! * hierarchy of master equations,
//! * pseudomode master equation (Lindblad form, requires `f_j = g_j`),
//! * pseudomode stochastic Schrödinger equation (white-noise unraveling of the latter).
//!
//! Module map:
//!
//! | module | contents |
//! |---|---|
//! | [`fock`] | truncation schemes, basis enumeration, ladder operators |
//! | [`bcf`] | time coefficients, bath models, benchmark baths |
//! | [`noise`] | colored/OU/white/thermal noise generators |
//! | [`propagate`] | right-hand sides and the RK4 + Euler–Maruyama stepper |
//! | [`ensemble`] | trajectory fan-out, averaging, observables |
//! | [`error_lab`] | Richardson, truncation and stochastic error metrics |
//! | [`config`], [`driver`] | run configuration and batch front-end |

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bcf;
pub mod config;
pub mod driver;
pub mod ensemble;
pub mod error;
pub mod error_lab;
pub mod fock;
pub mod noise;
pub mod propagate;
pub mod series;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

pub(crate) const I: C64 = C64::new(0.0, 1.0);
