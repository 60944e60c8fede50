//! Numerical toolkit for weighted second-order Rellich-Sobolev inequalities on
//! punctured balls and whole space.
//!
//! The central device is the logarithmic cylinder change of variables
//! `u(x) = |x|^{-H} w(-log |x|) phi(x/|x|)`, which turns weighted radial
//! integrals into unweighted integrals of a constant-coefficient operator on
//! the line. Everything else builds on it:
//!
//! * [`params`]: parameter tuples and the constants derived from them.
//! * [`cylinder`]: profile storage, the norm identities and the reflection map.
//! * [`modes`]: the per-mode symbol, the closed-form constant and cap eigenmodes.
//! * [`rayleigh`]: discrete minimization of cylinder quotients.
//! * [`degeneration`]: explicit families whose quotients collapse, and rate fits.
//! * [`poisson`]: radial annular Poisson problems and comparison checks.
//! * [`harness`]: random samples, verification suites, sweeps and reports.

pub mod banded;
pub mod cylinder;
pub mod degeneration;
pub mod error;
pub mod harness;
pub mod modes;
pub mod params;
pub mod poisson;
pub mod quadrature;
pub mod rayleigh;

pub use error::{Error, Result};
pub use params::{DerivedParams, Params};
pub use quadrature::{Grid1D, GridKind};
