//! Belief propagation for the optimality system: paired mean/susceptibility
//! messages on the asset side (`m_w`, `chi_w`) and the scenario side
//! (`m_u`, `chi_u`), iterated in full parallel sweeps with damping, plus a
//! budget multiplier `k` adjusted every sweep toward `sum_i m_w[i] = N`.
//!
//! At a fixed point `k e = beta J m_w` holds, so together with the budget
//! the means solve the same system as the direct solver, at `O(N p)` per
//! sweep instead of an `O(N^3)` factorization. The mean of the converged
//! portfolio messages is independent of the inverse temperature; only the
//! susceptibilities carry `beta`.
//!
//! The zero-temperature mode removes `beta` from the update equations by
//! scaling it into the susceptibilities (`chi_u/beta`, `beta chi_w`, and
//! likewise for their hatted partners and `k`): in those variables the
//! sweep equations keep their finite-temperature form with the scenario
//! closure `chi_u = 1/(1 + tchi_u)`, and no quantity grows with `beta`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BpDiagnostics, Portfolio, ReturnMatrix, SolveReport, SolverId};
use crate::solvers::finish_report;

/// Inverse temperature of a belief-propagation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Beta {
    /// Optimize directly in the rescaled-susceptibility variables.
    ZeroTemperatureLimit,
    Finite(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BPParams {
    pub beta: Beta,
    /// Weight of the previous value in each message update, in `[0, 1)`.
    pub damping: f64,
    /// L1 stopping threshold on `|d k| + sum_i |d m_w[i]|` per sweep.
    pub delta: f64,
    pub max_iters: usize,
    /// Step size of the budget-multiplier update
    /// `k <- k + k_step (N - sum_i m_w[i])`.
    pub k_step: f64,
}

impl BPParams {
    /// Reference parameters for an `n`-asset market: zero-temperature mode,
    /// damping `0.5`, `delta = 1e-6`, `k_step = 1/n`.
    pub fn for_assets(n: usize) -> Self {
        Self {
            beta: Beta::ZeroTemperatureLimit,
            damping: 0.5,
            delta: 1e-6,
            max_iters: 100_000,
            k_step: 1.0 / n as f64,
        }
    }

    /// Parameters with the multiplier step sized for this instance.
    ///
    /// The budget loop has static gain `k_step e^T (beta J)^-1 e`, which
    /// concentrates at `k_step N <1/s> / (beta (alpha - 1))`; the step is
    /// chosen from the known variances to put that gain near 1/2.
    pub fn tuned_for(x: &ReturnMatrix, beta: Beta) -> Self {
        let n = x.n_assets() as f64;
        let alpha = x.scenario_ratio();
        let m1 = x.variances().iter().map(|s| 1.0 / s).sum::<f64>() / n;
        let beta_num = match beta {
            Beta::ZeroTemperatureLimit => 1.0,
            Beta::Finite(b) => b,
        };
        let k_step = 0.5 * beta_num * (alpha - 1.0).max(0.05) / (n * m1);
        Self {
            beta,
            k_step,
            ..Self::for_assets(x.n_assets())
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Beta::Finite(b) = self.beta {
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "inverse temperature must be positive, got {b}"
                )));
            }
        }
        if !(0.0..1.0).contains(&self.damping)
            || !(self.delta.is_finite() && self.delta > 0.0)
            || !(self.k_step.is_finite() && self.k_step > 0.0)
            || self.max_iters == 0
        {
            return Err(Error::InvalidParameter(format!(
                "belief-propagation parameters out of range: {self:?}"
            )));
        }
        Ok(())
    }
}

pub fn belief_propagation(x: &ReturnMatrix, params: &BPParams) -> Result<SolveReport> {
    params.validate()?;
    if !x.has_unique_optimum() {
        return Err(Error::AlphaOutOfRange {
            alpha: x.scenario_ratio(),
        });
    }
    let n = x.n_assets();
    let p = x.n_scenarios();
    let nf = n as f64;
    let sqrt_n = nf.sqrt();
    let alpha = x.scenario_ratio();
    // in zero-temperature mode the rescaled equations coincide with the
    // finite-temperature ones at unit beta
    let beta = match params.beta {
        Beta::ZeroTemperatureLimit => 1.0,
        Beta::Finite(b) => b,
    };
    let damp = params.damping;
    let fresh = 1.0 - damp;

    let entries = x.entries();
    let squares = entries.map(|v| v * v);

    // start from the large-N self-consistent susceptibilities and the
    // budget-feasible uniform portfolio
    let m1_hat = x.variances().iter().map(|s| 1.0 / s).sum::<f64>() / nf;
    let mut m_w = DVector::repeat(n, 1.0);
    let mut m_u = DVector::zeros(p);
    let mut chi_w = DVector::from_iterator(
        n,
        x.variances()
            .iter()
            .map(|s| 1.0 / (beta * (alpha - 1.0) * s)),
    );
    let mut chi_u = DVector::repeat(p, beta * (1.0 - 1.0 / alpha));
    let mut k = beta * (alpha - 1.0) / m1_hat;

    let mut step = f64::INFINITY;
    let mut iterations = 0;
    while iterations < params.max_iters {
        // scenario side from the current asset side
        let tchi_u = squares.tr_mul(&chi_w) / nf;
        for mu in 0..p {
            let target = beta / (1.0 + beta * tchi_u[mu]);
            chi_u[mu] = damp * chi_u[mu] + fresh * target;
        }
        let mut h_u = entries.tr_mul(&m_w) / sqrt_n;
        for mu in 0..p {
            h_u[mu] -= tchi_u[mu] * m_u[mu];
            let target = -chi_u[mu] * h_u[mu];
            m_u[mu] = damp * m_u[mu] + fresh * target;
        }

        // asset side from the refreshed scenario side
        let tchi_w = &squares * &chi_u / nf;
        let mut h_w = entries * &m_u / sqrt_n;
        let mut l1 = 0.0;
        for i in 0..n {
            if tchi_w[i] <= 0.0 || !tchi_w[i].is_finite() {
                return Err(Error::NumericalBreakdown(format!(
                    "nonpositive asset susceptibility tchi_w[{i}] = {}",
                    tchi_w[i]
                )));
            }
            chi_w[i] = damp * chi_w[i] + fresh / tchi_w[i];
            h_w[i] += tchi_w[i] * m_w[i];
            let target = chi_w[i] * (h_w[i] + k);
            let next = damp * m_w[i] + fresh * target;
            l1 += (next - m_w[i]).abs();
            m_w[i] = next;
        }
        let budget_gap = nf - m_w.sum();
        if !budget_gap.is_finite() {
            return Err(Error::NumericalBreakdown(
                "portfolio messages lost finiteness; reduce k_step or increase damping".into(),
            ));
        }
        let dk = params.k_step * budget_gap;
        k += dk;
        iterations += 1;
        step = l1 + dk.abs();
        if step <= params.delta {
            break;
        }
    }

    let converged = step <= params.delta;
    let diagnostics = BpDiagnostics {
        mean_chi_w: chi_w.mean(),
        mean_chi_u: chi_u.mean(),
    };
    finish_report(
        x,
        Portfolio::from(m_w),
        SolverId::BeliefPropagation,
        iterations,
        converged,
        step,
        Some(diagnostics),
    )
}
