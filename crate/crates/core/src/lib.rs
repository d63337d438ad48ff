//! Numerical laboratory for fractional KPZ-type problems
//!
//! ```text
//!   (-Delta)^s u = mu(x) |D_t u|^q + lambda f(x)   in Omega,
//!   u = 0                                        in R^N \ Omega,
//! ```
//!
//! where the nonlocal gradient `D_t` is one of the half t-Laplacian
//! `(-Delta)^{t/2}`, the Riesz t-gradient `nabla^t`, or the Stein t-functional
//! `D_t`. The crate discretizes every operator on uniform cell-centered grids
//! over intervals, disks and squares, solves the linear fractional Poisson
//! problem densely, measures the embedding and Calderon-Zygmund constants
//! that enter the existence thresholds, runs Picard iterations for the
//! nonlinear problem, and evaluates the explicit non-existence thresholds.
//!
//! Module overview:
//!
//! * [`domain_grid`]: domains, grids, fields.
//! * [`fracops`]: normalization constants and the nonlocal operators.
//! * [`poisson`]: Green operator, Calderon-Zygmund probe, decomposition diagnostics.
//! * [`norms`]: Lebesgue, Gagliardo, Stein and Holder quantities.
//! * [`kpz`]: admissible exponents, thresholds, Picard iteration, sweeps.
//! * [`nonexist`]: torsion functions, boundary envelopes, non-existence thresholds.
//! * [`experiment`]: configuration-driven experiment runner behind the CLI.

pub mod domain_grid;
pub mod error;
pub mod experiment;
pub mod fracops;
pub mod kpz;
pub mod nonexist;
pub mod norms;
pub mod poisson;
pub mod quadrature;
pub mod sampling;

pub use domain_grid::{make_grid, Domain, Field, Grid, Point};
pub use error::{Error, Result};
pub use fracops::{kernel_constants, KernelConstants, OperatorMatrix, VectorField};
pub use kpz::{Exponent, GradientVariant, ProblemSpec};
pub use poisson::GreenOperator;
