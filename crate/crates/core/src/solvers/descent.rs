//! Lagrangian steepest descent on `L(w, zeta) = H(w|X) + zeta (N - e^T w)`:
//! gradient steps on the portfolio, ascent steps on the budget multiplier,
//! stopping on the L1 distance between consecutive iterates.
//!
//! The portfolio gradient is `J w - zeta e` with `J` the per-asset
//! covariance, applied matrix-free as `X (X^T w) / N`. The textbook step
//! sizes `eta_w = 100/N`, `eta_zeta = 1/N` are stable at large `N` for
//! unit-scale variances but can exceed the stability threshold
//! `eta_w < 2 / lambda_max(J)` on small or high-variance instances, which
//! is what [`SteepestDescentParams::tuned_for`] and the divergence guard
//! are for.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Portfolio, ReturnMatrix, SolveReport, SolverId};
use crate::solvers::{covariance_lambda_max, finish_report};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteepestDescentParams {
    /// Portfolio step size.
    pub eta_w: f64,
    /// Budget-multiplier step size.
    pub eta_zeta: f64,
    /// L1 stopping threshold on the step `|d zeta| + sum_i |d w_i|`.
    pub delta: f64,
    pub max_iters: usize,
    /// Abort with an error once `||w||_1` exceeds this.
    pub divergence_cap: f64,
}

impl SteepestDescentParams {
    /// The reference step sizes for an `n`-asset market: `eta_w = 100/n`,
    /// `eta_zeta = 1/n`, `delta = 1e-6`.
    pub fn for_assets(n: usize) -> Self {
        let nf = n as f64;
        Self {
            eta_w: 100.0 / nf,
            eta_zeta: 1.0 / nf,
            delta: 1e-6,
            max_iters: 1_000_000,
            divergence_cap: 1e12,
        }
    }

    /// Step sizes adapted to this instance: `eta_w` is set from a
    /// power-iteration estimate of `lambda_max(J)` so the quadratic part
    /// contracts, and `eta_zeta` is scaled by the stiffness the budget
    /// loop actually sees, `N / (e^T J^-1 e) ~ (alpha - 1) / <1/s>`.
    /// With the reference `eta_zeta = 1/N` the explicit multiplier update
    /// turns the budget mode into a growing oscillation whenever that
    /// stiffness drops below 1 (small-variance mixes at desk-scale `N`).
    pub fn tuned_for(x: &ReturnMatrix) -> Self {
        let n = x.n_assets() as f64;
        let lambda_max = covariance_lambda_max(x, 40).max(f64::MIN_POSITIVE);
        let alpha = x.scenario_ratio();
        let m1 = x.variances().iter().map(|s| 1.0 / s).sum::<f64>() / n;
        let stiffness = ((alpha - 1.0).max(0.05) / m1).min(1.0);
        Self {
            eta_w: 1.3 / (1.05 * lambda_max),
            eta_zeta: 0.25 * stiffness / n,
            ..Self::for_assets(x.n_assets())
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all_positive = self.eta_w > 0.0
            && self.eta_zeta > 0.0
            && self.delta > 0.0
            && self.max_iters > 0
            && self.divergence_cap > 0.0;
        if !all_positive
            || !self.eta_w.is_finite()
            || !self.eta_zeta.is_finite()
            || !self.delta.is_finite()
        {
            return Err(Error::InvalidParameter(format!(
                "steepest-descent parameters must all be positive and finite: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Runs the descent from `w = e`, `zeta = 1`. Hitting `max_iters` yields a
/// `converged = false` report; exceeding the divergence cap is an error.
pub fn steepest_descent(x: &ReturnMatrix, params: &SteepestDescentParams) -> Result<SolveReport> {
    params.validate()?;
    let n = x.n_assets();
    let nf = n as f64;
    let mut w = DVector::repeat(n, 1.0);
    let mut zeta = 1.0f64;
    let mut step = f64::INFINITY;
    let mut iterations = 0;

    while iterations < params.max_iters {
        let grad = (x.entries() * x.entries().tr_mul(&w)) / nf; // J w
        let budget_gap = nf - w.sum();
        let mut l1 = 0.0;
        let mut w_l1 = 0.0;
        for i in 0..n {
            let delta_i = -params.eta_w * (grad[i] - zeta);
            w[i] += delta_i;
            l1 += delta_i.abs();
            w_l1 += w[i].abs();
        }
        let zeta_next = zeta + params.eta_zeta * budget_gap;
        l1 += (zeta_next - zeta).abs();
        zeta = zeta_next;
        iterations += 1;
        step = l1;

        if !w_l1.is_finite() || w_l1 > params.divergence_cap {
            return Err(Error::Diverged {
                iterations,
                norm: w_l1,
            });
        }
        if step <= params.delta {
            return finish_report(
                x,
                Portfolio::from(w),
                SolverId::SteepestDescent,
                iterations,
                true,
                step,
                None,
            );
        }
    }

    finish_report(
        x,
        Portfolio::from(w),
        SolverId::SteepestDescent,
        iterations,
        false,
        step,
        None,
    )
}
