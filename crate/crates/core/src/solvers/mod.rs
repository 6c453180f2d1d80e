//! Three independent routes to the budget-constrained minimum-risk
//! portfolio: a direct linear solve of the optimality system, Lagrangian
//! steepest descent, and belief propagation. All three agree at their
//! fixed points; the iterative two exist to avoid the `O(N^3)` solve and
//! to expose the message susceptibilities.

mod bp;
mod descent;
mod exact;

pub use bp::{belief_propagation, BPParams, Beta};
pub use descent::{steepest_descent, SteepestDescentParams};
pub use exact::{exact_solve, metrics_via_inverse};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{
    concentration, risk_per_asset, BpDiagnostics, Portfolio, ReturnMatrix, SolveReport, SolverId,
};

/// Solver selection with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    SteepestDescent(SteepestDescentParams),
    BeliefPropagation(BPParams),
}

impl Method {
    pub fn solver_id(&self) -> SolverId {
        match self {
            Method::Exact => SolverId::Exact,
            Method::SteepestDescent(_) => SolverId::SteepestDescent,
            Method::BeliefPropagation(_) => SolverId::BeliefPropagation,
        }
    }
}

/// Dispatches to the chosen solver.
pub fn solve(x: &ReturnMatrix, method: &Method) -> Result<SolveReport> {
    match method {
        Method::Exact => exact_solve(x),
        Method::SteepestDescent(params) => steepest_descent(x, params),
        Method::BeliefPropagation(params) => belief_propagation(x, params),
    }
}

/// Builds the report for a solved portfolio. Risk and concentration are
/// always measured on the returned weights, never taken from solver state.
pub(crate) fn finish_report(
    x: &ReturnMatrix,
    portfolio: Portfolio,
    solver: SolverId,
    iterations: usize,
    converged: bool,
    residual: f64,
    bp: Option<BpDiagnostics>,
) -> Result<SolveReport> {
    let epsilon = risk_per_asset(&portfolio, x)?;
    let q_w = concentration(&portfolio);
    debug_assert!(epsilon >= 0.0);
    Ok(SolveReport {
        portfolio,
        epsilon,
        q_w,
        iterations,
        converged,
        solver,
        residual,
        bp,
    })
}

/// Power-iteration estimate of the largest eigenvalue of the covariance
/// matrix `J = X X^T / N`, computed matrix-free.
pub(crate) fn covariance_lambda_max(x: &ReturnMatrix, iterations: usize) -> f64 {
    let n = x.n_assets();
    let nf = n as f64;
    // deterministic start with spread across coordinates
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.5 * ((i % 7) as f64 - 3.0) / 7.0);
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..iterations {
        let jv = (x.entries() * x.entries().tr_mul(&v)) / nf;
        lambda = jv.norm();
        if lambda == 0.0 {
            return 0.0;
        }
        v = jv / lambda;
    }
    lambda
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{generate, ReturnDistribution};
    use crate::variance::VarianceSpec;

    #[test]
    fn dispatch_matches_the_solvers_and_reports_agree() {
        let spec = VarianceSpec::preset("2B'").unwrap();
        let x = generate(40, 100, &spec, ReturnDistribution::Gaussian, 15).unwrap();

        let direct = exact_solve(&x).unwrap();
        let via_dispatch = solve(&x, &Method::Exact).unwrap();
        assert_eq!(direct, via_dispatch);
        assert_eq!(via_dispatch.solver, crate::model::SolverId::Exact);

        let sd = solve(
            &x,
            &Method::SteepestDescent(SteepestDescentParams::tuned_for(&x)),
        )
        .unwrap();
        let bp = solve(
            &x,
            &Method::BeliefPropagation(BPParams::tuned_for(&x, Beta::ZeroTemperatureLimit)),
        )
        .unwrap();
        for report in [&direct, &sd, &bp] {
            assert!(report.q_w >= 1.0 - 1e-9);
            assert!(
                (report.epsilon / direct.epsilon - 1.0).abs() <= 1e-6,
                "{:?} disagrees on the risk",
                report.solver
            );
        }
    }

    #[test]
    fn lambda_max_estimate_tracks_the_spectrum() {
        let spec = VarianceSpec::Identical { s: 1.0 };
        let x = generate(50, 200, &spec, ReturnDistribution::Gaussian, 4).unwrap();
        let estimate = covariance_lambda_max(&x, 60);
        let exact = x
            .covariance_matrix()
            .symmetric_eigenvalues()
            .iter()
            .fold(0.0f64, |a, &b| a.max(b));
        assert!(
            (estimate / exact - 1.0).abs() < 0.02,
            "{estimate} vs {exact}"
        );
    }
}
