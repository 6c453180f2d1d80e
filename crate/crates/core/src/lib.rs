//! Budget-constrained minimum-variance portfolios on random return
//! matrices with non-identical per-asset variances.
//!
//! The library solves `min_w H(w|X)` subject to `sum_i w_i = N` for dense
//! scenario matrices `X`, by three independent routes (direct linear
//! solve, Lagrangian steepest descent, belief propagation), and verifies
//! the closed-form predictions for the minimal risk per asset and the
//! concentration level of the optimum by Monte Carlo ensembles over the
//! scenario ratio `alpha = p/N`, against the annealed (expected-risk)
//! baseline.
//!
//! Modules:
//! - [`model`]: portfolios, return matrices, and the two metrics;
//! - [`variance`]: variance distributions and their inverse moments;
//! - [`market`]: seeded random matrix generation and rescaling;
//! - [`analytic`]: closed-form quenched/annealed predictions;
//! - [`solvers`]: the three solvers behind one dispatch;
//! - [`experiment`]: the ensemble sweep harness with persistence;
//! - [`io`]: CSV matrix and variance-file formats.

pub mod analytic;
pub mod error;
pub mod experiment;
pub mod io;
pub mod market;
pub mod model;
pub mod rng;
pub mod solvers;
pub mod variance;

pub use error::{Error, Result};
pub use model::{
    budget_residual, concentration, risk_per_asset, BpDiagnostics, Portfolio, ReturnMatrix,
    SolveReport, SolverId,
};
