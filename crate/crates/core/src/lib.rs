//! Growth constants of perturbed composition operators.
//!
//! The crate computes, with exact integer oracles wherever the underlying
//! objects are exact, the growth rates of two arithmetic moment sequences:
//!
//! * the power moments of the Thue-Morse sign polynomials
//!   `prod_{r<n} (1 - z^{2^r})`, whose `2k`-th moments grow like
//!   `(3^k/2)^n` up to an exponentially small secondary term, and
//! * the power moments of the Stern diatomic sequence over dyadic blocks,
//!   whose growth constant is the Perron eigenvalue of an exact integer
//!   transfer matrix.
//!
//! Both sequences are governed by a two-branch composition operator
//! `f -> f∘a + kappa (f∘b)` whose spectral radius is `1 + kappa(x_0)` up to
//! a quantified error. The [`bounds`] module implements that quantitative
//! machinery: word-weight envelopes, comparison series with certified
//! truncation bounds, and a deterministic two-sided bracket for the radius
//! of convergence of the iterate generating function.
//!
//! Modules:
//!
//! * [`operator`] - composition systems, word weights, exact-keyed iteration;
//! * [`bounds`] - bound profiles, series, radius brackets, hypothesis sweeps;
//! * [`thue_morse`] - exact sign-polynomial moments and their operator model;
//! * [`stern`] - exact diatomic moments, transfer matrix, matrix rewriting;
//! * [`verify`] - the runnable acceptance checks behind `specrad full-verify`;
//! * [`report`] - deterministic JSON report envelopes for the CLI.

pub mod bounds;
pub mod error;
pub mod operator;
pub mod report;
pub mod sampling;
pub mod stern;
pub mod thue_morse;
pub mod verify;

pub use error::{Error, Result};
