//! Domain types for portfolios and return matrices, plus the two metrics
//! (risk per asset and concentration level) every other module consumes.
//!
//! A return matrix stores the raw zero-mean returns `x[i][mu]` of asset `i`
//! in scenario `mu`; the `1/sqrt(N)` normalization of the risk functional is
//! applied inside [`risk_per_asset`], so stored entries keep the variance
//! semantics of the generating model (row `i` has variance `s_i`).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Budget tolerance for iterative-solver outputs, relative to `N`.
pub const BUDGET_TOL_ITERATIVE: f64 = 1e-6;
/// Budget tolerance for the exact solver, relative to `N`.
pub const BUDGET_TOL_EXACT: f64 = 1e-10;

/// An `N x p` realization of zero-mean returns together with the per-asset
/// variances that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnMatrix {
    entries: DMatrix<f64>,
    variances: Vec<f64>,
}

impl ReturnMatrix {
    /// Builds a return matrix from raw entries (rows = assets, columns =
    /// scenarios) and the generating variances.
    ///
    /// Variances must be strictly positive and finite. `p <= N` is allowed
    /// (see [`ReturnMatrix::has_unique_optimum`]) but rejected by solvers.
    pub fn new(entries: DMatrix<f64>, variances: Vec<f64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::InvalidParameter(
                "return matrix must have at least one asset and one scenario".into(),
            ));
        }
        if variances.len() != entries.nrows() {
            return Err(Error::DimensionMismatch {
                context: "variances vs matrix rows",
                expected: entries.nrows(),
                actual: variances.len(),
            });
        }
        if let Some(bad) = variances.iter().find(|s| !s.is_finite() || **s <= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "asset variances must be positive and finite, got {bad}"
            )));
        }
        if !entries.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter(
                "return matrix entries must be finite".into(),
            ));
        }
        Ok(Self { entries, variances })
    }

    pub fn n_assets(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_scenarios(&self) -> usize {
        self.entries.ncols()
    }

    /// Scenario ratio `alpha = p / N`.
    pub fn scenario_ratio(&self) -> f64 {
        self.n_scenarios() as f64 / self.n_assets() as f64
    }

    /// True when `p > N`, i.e. the minimum-risk portfolio is unique with
    /// probability one.
    pub fn has_unique_optimum(&self) -> bool {
        self.n_scenarios() > self.n_assets()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Generating variances `s_i`, one per asset.
    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    /// Covariance matrix `J` with `J[i][j] = (1/N) sum_mu x[i][mu] x[j][mu]`.
    ///
    /// Symmetric positive semidefinite; positive definite with probability
    /// one when `p > N`.
    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        let n = self.n_assets() as f64;
        let mut j = &self.entries * self.entries.transpose();
        j /= n;
        // enforce exact symmetry against rounding in the product
        for r in 0..j.nrows() {
            for c in 0..r {
                let avg = 0.5 * (j[(r, c)] + j[(c, r)]);
                j[(r, c)] = avg;
                j[(c, r)] = avg;
            }
        }
        j
    }
}

/// A portfolio of investment ratios. Short selling is allowed, so entries
/// may be negative; the budget `sum w_i = N` is a solver contract checked
/// via [`budget_residual`], not a construction invariant (probe vectors
/// violating it are legal inputs to the metrics).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Portfolio {
    weights: Vec<f64>,
}

impl Portfolio {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter(
                "portfolio must hold at least one asset".into(),
            ));
        }
        if !weights.iter().all(|w| w.is_finite()) {
            return Err(Error::InvalidParameter(
                "portfolio weights must be finite".into(),
            ));
        }
        Ok(Self { weights })
    }

    /// The all-ones portfolio `(1, ..., 1)`, the canonical budget-feasible
    /// start of the iterative solvers.
    pub fn equipartition(n_assets: usize) -> Self {
        Self {
            weights: vec![1.0; n_assets],
        }
    }

    pub fn n_assets(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn as_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.weights)
    }
}

impl From<DVector<f64>> for Portfolio {
    fn from(v: DVector<f64>) -> Self {
        Self {
            weights: v.data.into(),
        }
    }
}

/// Investment risk per asset of portfolio `w` on realization `x`:
/// `(1/N) * (1/2) * sum_mu ((1/sqrt(N)) sum_i x[i][mu] w_i)^2`.
pub fn risk_per_asset(w: &Portfolio, x: &ReturnMatrix) -> Result<f64> {
    if w.n_assets() != x.n_assets() {
        return Err(Error::DimensionMismatch {
            context: "portfolio vs return matrix",
            expected: x.n_assets(),
            actual: w.n_assets(),
        });
    }
    let n = x.n_assets() as f64;
    // v = X^T w / sqrt(N), one entry per scenario
    let v = x.entries().tr_mul(&w.as_vector()) / n.sqrt();
    Ok(0.5 * v.norm_squared() / n)
}

/// Concentration level `(1/N) sum_i w_i^2`: 1 for equipartition, `N` when
/// the whole budget sits in one asset.
pub fn concentration(w: &Portfolio) -> f64 {
    let n = w.n_assets() as f64;
    w.weights().iter().map(|wi| wi * wi).sum::<f64>() / n
}

/// Absolute violation of the budget constraint, `|sum_i w_i - N|`, where
/// `N = n_assets` is the market size the portfolio is measured against.
pub fn budget_residual(w: &Portfolio, n_assets: usize) -> f64 {
    (w.weights().iter().sum::<f64>() - n_assets as f64).abs()
}

/// Which algorithm produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverId {
    Exact,
    SteepestDescent,
    BeliefPropagation,
}

impl std::fmt::Display for SolverId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            SolverId::Exact => "exact",
            SolverId::SteepestDescent => "steepest_descent",
            SolverId::BeliefPropagation => "belief_propagation",
        };
        f.write_str(name)
    }
}

/// Mean message susceptibilities of a belief-propagation run, kept for the
/// self-consistency checks against the closed-form susceptibilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BpDiagnostics {
    /// Mean of the portfolio-side susceptibilities `chi_w[i]`.
    pub mean_chi_w: f64,
    /// Mean of the scenario-side susceptibilities `chi_u[mu]`.
    pub mean_chi_u: f64,
}

/// Outcome of one solver invocation.
///
/// `epsilon` and `q_w` are always recomputed from the returned portfolio via
/// [`risk_per_asset`] and [`concentration`], never taken from solver
/// internals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub portfolio: Portfolio,
    pub epsilon: f64,
    pub q_w: f64,
    pub iterations: usize,
    pub converged: bool,
    pub solver: SolverId,
    /// Final value of the solver's stopping metric (KKT residual for the
    /// exact solver, last L1 step size for the iterative ones).
    pub residual: f64,
    /// Present only for belief-propagation runs.
    pub bp: Option<BpDiagnostics>,
}

impl SolveReport {
    /// Budget violation of the reported portfolio.
    pub fn budget_residual(&self) -> f64 {
        budget_residual(&self.portfolio, self.portfolio.n_assets())
    }
}
