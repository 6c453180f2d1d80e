//! Direct solver: the optimal portfolio is `w = N J^-1 e / (e^T J^-1 e)`,
//! obtained from a Cholesky factorization of the covariance matrix and two
//! triangular solves. The inverse is never formed.

use nalgebra::{Cholesky, DVector};

use crate::error::{Error, Result};
use crate::model::{Portfolio, ReturnMatrix, SolverId};
use crate::solvers::finish_report;

/// Condition-number estimate above which the covariance is treated as
/// numerically singular.
const COND_LIMIT: f64 = 1e12;

struct Factorized {
    chol: Cholesky<f64, nalgebra::Dyn>,
    /// e^T J^-1 e / N
    inv_quad: f64,
    /// e^T J^-2 e / N
    inv_quad_sq: f64,
    /// N J^-1 e / (e^T J^-1 e)
    weights: DVector<f64>,
}

fn factorize(x: &ReturnMatrix) -> Result<Factorized> {
    if !x.has_unique_optimum() {
        return Err(Error::AlphaOutOfRange {
            alpha: x.scenario_ratio(),
        });
    }
    let n = x.n_assets();
    let nf = n as f64;
    let j = x.covariance_matrix();
    let lambda_max = crate::solvers::covariance_lambda_max(x, 30);
    let chol = Cholesky::new(j).ok_or(Error::SingularCovariance {
        cond: f64::INFINITY,
    })?;

    // inverse power iteration for the smallest eigenvalue
    let mut v = DVector::from_fn(n, |i, _| if i % 2 == 0 { 1.0 } else { -1.0 });
    v /= v.norm();
    let mut inv_lambda = 0.0;
    for _ in 0..30 {
        let z = chol.solve(&v);
        inv_lambda = z.norm();
        if !inv_lambda.is_finite() || inv_lambda == 0.0 {
            return Err(Error::SingularCovariance {
                cond: f64::INFINITY,
            });
        }
        v = z / inv_lambda;
    }
    let cond = lambda_max * inv_lambda;
    if !cond.is_finite() || cond > COND_LIMIT {
        return Err(Error::SingularCovariance { cond });
    }

    let e = DVector::repeat(n, 1.0);
    let y1 = chol.solve(&e); // J^-1 e
    let y2 = chol.solve(&y1); // J^-2 e
    let quad = y1.sum();
    if quad <= 0.0 {
        return Err(Error::SingularCovariance { cond });
    }
    let weights = &y1 * (nf / quad);
    Ok(Factorized {
        chol,
        inv_quad: quad / nf,
        inv_quad_sq: y2.sum() / nf,
        weights,
    })
}

/// Solves the optimality system exactly. The report's `residual` is the
/// relative stationarity defect `||J w - zeta e||_inf / ||J w||_inf` for
/// the implied multiplier `zeta = e^T J w / N`.
pub fn exact_solve(x: &ReturnMatrix) -> Result<crate::model::SolveReport> {
    let f = factorize(x)?;
    let nf = x.n_assets() as f64;
    let jw = f.chol.l() * (f.chol.l().transpose() * &f.weights);
    let zeta = jw.sum() / nf;
    let defect = jw.iter().map(|v| (v - zeta).abs()).fold(0.0, f64::max);
    let scale = jw.amax().max(f64::MIN_POSITIVE);
    let residual = defect / scale;
    finish_report(
        x,
        Portfolio::from(f.weights),
        SolverId::Exact,
        0,
        true,
        residual,
        None,
    )
}

/// Risk and concentration of the optimum computed through the inverse
/// quadratic forms, `eps = 1 / (2 e^T J^-1 e / N)` and
/// `q_w = (e^T J^-2 e / N) / (e^T J^-1 e / N)^2`.
///
/// This is an algebraically independent route from evaluating the metrics
/// on the solved weights; the two must agree to solver precision.
pub fn metrics_via_inverse(x: &ReturnMatrix) -> Result<(f64, f64)> {
    let f = factorize(x)?;
    let epsilon = 1.0 / (2.0 * f.inv_quad);
    let q_w = f.inv_quad_sq / (f.inv_quad * f.inv_quad);
    Ok((epsilon, q_w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{generate, ReturnDistribution};
    use crate::model::{budget_residual, concentration, ReturnMatrix, BUDGET_TOL_EXACT};
    use crate::variance::VarianceSpec;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn hand_matrix() -> ReturnMatrix {
        // rows (1,0,1) and (0,1,1): J = [[1, 1/2], [1/2, 1]]
        let entries = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
        ReturnMatrix::new(entries, vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn two_by_two_hand_inversion() {
        let report = exact_solve(&hand_matrix()).unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations, 0);
        assert_relative_eq!(report.portfolio.weights()[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(report.portfolio.weights()[1], 1.0, epsilon = 1e-12);
        assert_relative_eq!(report.epsilon, 0.75, epsilon = 1e-12);
        let (eps_inv, qw_inv) = metrics_via_inverse(&hand_matrix()).unwrap();
        assert_relative_eq!(eps_inv, 0.75, epsilon = 1e-12);
        assert_relative_eq!(qw_inv, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn orthogonal_scenarios_give_equipartition() {
        // rows of squared norm N and mutually orthogonal: J = I
        let entries = DMatrix::from_row_slice(2, 4, &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0]);
        let x = ReturnMatrix::new(entries, vec![1.0, 1.0]).unwrap();
        let report = exact_solve(&x).unwrap();
        for w in report.portfolio.weights() {
            assert_relative_eq!(*w, 1.0, epsilon = 1e-12);
        }
        assert_relative_eq!(report.q_w, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn permuting_assets_permutes_the_solution() {
        let spec = VarianceSpec::preset("1B").unwrap();
        let x = generate(24, 60, &spec, ReturnDistribution::Gaussian, 421).unwrap();
        let report = exact_solve(&x).unwrap();

        let perm: Vec<usize> = (0..24).map(|i| (i * 7 + 3) % 24).collect();
        let permuted = DMatrix::from_fn(24, 60, |i, j| x.entries()[(perm[i], j)]);
        let variances = perm.iter().map(|&i| x.variances()[i]).collect();
        let xp = ReturnMatrix::new(permuted, variances).unwrap();
        let rp = exact_solve(&xp).unwrap();

        for (k, &i) in perm.iter().enumerate() {
            assert_relative_eq!(
                rp.portfolio.weights()[k],
                report.portfolio.weights()[i],
                max_relative = 1e-9
            );
        }
        assert_relative_eq!(rp.epsilon, report.epsilon, max_relative = 1e-10);
        assert_relative_eq!(rp.q_w, report.q_w, max_relative = 1e-9);
    }

    #[test]
    fn budget_and_stationarity_hold_at_the_solution() {
        let spec = VarianceSpec::preset("2B'").unwrap();
        let x = generate(60, 150, &spec, ReturnDistribution::Gaussian, 8).unwrap();
        let report = exact_solve(&x).unwrap();
        assert!(budget_residual(&report.portfolio, 60) <= BUDGET_TOL_EXACT * 60.0);
        assert!(report.residual <= 1e-8);
        assert!(report.q_w >= 1.0 - 1e-9);
        assert_relative_eq!(concentration(&report.portfolio), report.q_w);
    }

    #[test]
    fn scenario_deficient_input_is_rejected() {
        let entries = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let x = ReturnMatrix::new(entries, vec![1.0; 3]).unwrap();
        assert!(matches!(
            exact_solve(&x),
            Err(Error::AlphaOutOfRange { .. })
        ));
    }

    #[test]
    fn duplicated_assets_are_reported_singular() {
        // two identical rows make J rank deficient
        let row = [1.0, -0.5, 0.25, 2.0, -1.5];
        let mut data = Vec::new();
        data.extend_from_slice(&row);
        data.extend_from_slice(&row);
        let entries = DMatrix::from_row_slice(2, 5, &data);
        let x = ReturnMatrix::new(entries, vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            exact_solve(&x),
            Err(Error::SingularCovariance { .. })
        ));
    }
}
