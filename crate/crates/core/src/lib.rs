//! Numerical companion for pointwise convergence of nonelliptic Schrödinger
//! means `e^{i t_n □} f` along decreasing time sequences.
//!
//! * [`fields`]: band-limited trigonometric sums, Littlewood–Paley pieces and
//!   Sobolev norms.
//! * [`propagator`]: spectral evolution, maximal functions over time sets and a
//!   semi-analytic oracle for box data.
//! * [`sequences`]: weak Lorentz quasi-norms, dyadic time blocks, bad scales.
//! * [`estimates`]: scaling experiments for the maximal estimates.
//! * [`counterexample`]: the divergence construction, stage by stage.

pub mod counterexample;
pub mod error;
pub mod estimates;
pub mod fields;
pub mod propagator;
pub mod quad;
pub mod sequences;
pub mod sum;

pub use error::{Error, Result};
pub use num_complex::Complex64;
