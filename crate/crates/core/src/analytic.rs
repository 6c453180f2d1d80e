//! Closed-form predictions for the optimal portfolio's risk and
//! concentration: the quenched values (optimize each realization, then
//! average), the annealed baseline (optimize the averaged risk, the usual
//! operations-research route), the `gamma` rescaling law, and the
//! finite-temperature forms used to cross-check belief propagation.
//!
//! All formulas are functions of the scenario ratio `alpha = p/N > 1` and
//! the inverse variance moments alone.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Portfolio;
use crate::variance::InverseMoments;

fn require_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 1.0) {
        // the optimum is not unique for alpha <= 1 and the formulas diverge
        return Err(Error::AlphaOutOfRange { alpha });
    }
    Ok(())
}

/// Quenched minimal risk per asset, `(alpha - 1) / (2 <s^-1>)`.
pub fn quenched_epsilon(alpha: f64, m: &InverseMoments) -> Result<f64> {
    require_alpha(alpha)?;
    Ok((alpha - 1.0) / (2.0 * m.m1))
}

/// Quenched concentration level, `<s^-2>/<s^-1>^2 + 1/(alpha - 1)`.
pub fn quenched_qw(alpha: f64, m: &InverseMoments) -> Result<f64> {
    require_alpha(alpha)?;
    Ok(m.m2 / (m.m1 * m.m1) + 1.0 / (alpha - 1.0))
}

/// Annealed (expected-risk) minimum, `alpha / (2 <s^-1>)`. Defined for any
/// `alpha > 0`; it exceeds the quenched value by exactly `1/(2 <s^-1>)`.
pub fn annealed_epsilon(alpha: f64, m: &InverseMoments) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "annealed risk needs alpha > 0, got {alpha}"
        )));
    }
    Ok(alpha / (2.0 * m.m1))
}

/// Concentration of the annealed optimum, `<s^-2>/<s^-1>^2`.
pub fn annealed_qw(m: &InverseMoments) -> f64 {
    m.m2 / (m.m1 * m.m1)
}

/// The annealed optimal portfolio: weights proportional to inverse
/// variance, normalized by the empirical sum so the budget holds exactly
/// at finite `N`.
pub fn annealed_portfolio(variances: &[f64]) -> Result<Portfolio> {
    if variances.is_empty() {
        return Err(Error::InvalidParameter("empty variance vector".into()));
    }
    if let Some(s) = variances.iter().find(|s| !s.is_finite() || **s <= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "variances must be positive, got {s}"
        )));
    }
    let inv: Vec<f64> = variances.iter().map(|s| 1.0 / s).collect();
    let total: f64 = inv.iter().sum();
    let n = variances.len() as f64;
    Portfolio::new(inv.into_iter().map(|v| n * v / total).collect())
}

/// Risk per asset of the finite-temperature (inverse temperature `beta`)
/// ensemble: the quenched value plus `1/(2 beta)`.
pub fn finite_beta_epsilon(alpha: f64, m: &InverseMoments, beta: f64) -> Result<f64> {
    require_alpha(alpha)?;
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "inverse temperature must be positive, got {beta}"
        )));
    }
    Ok(0.5 * (alpha - 1.0) * (1.0 / m.m1 + 1.0 / (beta * (alpha - 1.0))))
}

/// Replica-symmetric portfolio susceptibility `chi_w = <s^-1> / (beta (alpha - 1))`,
/// the closed form the belief-propagation susceptibilities must reproduce.
pub fn rs_chi_w(alpha: f64, m: &InverseMoments, beta: f64) -> Result<f64> {
    require_alpha(alpha)?;
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "inverse temperature must be positive, got {beta}"
        )));
    }
    Ok(m.m1 / (beta * (alpha - 1.0)))
}

/// Quenched and annealed predictions at one scenario ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub alpha: f64,
    pub epsilon_quenched: f64,
    pub qw_quenched: f64,
    pub epsilon_annealed: f64,
    pub qw_annealed: f64,
    pub moments: InverseMoments,
}

impl Prediction {
    pub fn new(alpha: f64, moments: InverseMoments) -> Result<Self> {
        Ok(Self {
            alpha,
            epsilon_quenched: quenched_epsilon(alpha, &moments)?,
            qw_quenched: quenched_qw(alpha, &moments)?,
            epsilon_annealed: annealed_epsilon(alpha, &moments)?,
            qw_annealed: annealed_qw(&moments),
            moments,
        })
    }

    /// Prediction after rescaling all returns by `sqrt(gamma)`: both risks
    /// pick up a factor `gamma`, the concentration levels are unchanged.
    pub fn scaled(&self, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "scaling factor gamma must be positive, got {gamma}"
            )));
        }
        Ok(Self {
            epsilon_quenched: gamma * self.epsilon_quenched,
            epsilon_annealed: gamma * self.epsilon_annealed,
            ..*self
        })
    }
}
