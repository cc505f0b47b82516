//! Numerical laboratory for the insulated conductivity problem with two unit
//! balls a distance `2ε` apart.
//!
//! The potential solves Laplace's equation outside the balls with zero Neumann
//! data on the ball surfaces (perfect insulators) and Dirichlet data on an
//! outer boundary. For boundary data built from a single spherical-harmonic
//! mode `u = Y_k(ω)·w(r, z)` the problem reduces to a two-dimensional equation
//! in the meridian half-plane, which bispherical coordinates map onto a
//! rectangle. The crate provides:
//!
//! - [`geometry`]: the gap geometry and the bispherical coordinate map;
//! - [`pde`]: self-adjoint flux-form assembly of the meridian equation;
//! - [`linsolve`]: a deterministic preconditioned conjugate-gradient solver;
//! - [`field`]: gradient reconstruction and pointwise diagnostics on solved
//!   fields (directional gradient envelope, boundary identity checks);
//! - [`estimates`]: the closed-form exponent `γ*(n)`, the `(b, A)` constant
//!   recipe, and the auxiliary comparison quantities built from them;
//! - [`lemmas`]: standalone oracles for the self-contained inequalities;
//! - [`experiments`]: ε-sweeps, exponent fitting, convergence studies and
//!   verification campaigns with reproducible CSV/JSON output;
//! - [`cli`]: the `gaplab` command-line surface.

pub mod cli;
pub mod error;
pub mod estimates;
pub mod experiments;
pub mod field;
pub mod geometry;
pub mod lemmas;
pub mod linsolve;
pub mod pde;

pub use error::{Error, Result};
