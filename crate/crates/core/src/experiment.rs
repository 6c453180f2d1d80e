//! Monte Carlo sweep harness: for every scenario ratio on a grid, generate
//! independent return matrices, solve each one, aggregate risk and
//! concentration with standard errors, and pair the aggregates with the
//! closed-form predictions.
//!
//! Sample seeds are derived up front from `(base_seed, alpha index,
//! sample index)`, samples run in parallel, and the reduction iterates in
//! sample order, so results are identical for any thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;

use crate::analytic::Prediction;
use crate::error::{Error, Result};
use crate::market::{generate, rescale, ReturnDistribution};
use crate::model::{SolveReport, SolverId};
use crate::rng::sample_seed;
use crate::solvers::{solve, BPParams, Beta, Method, SteepestDescentParams};
use crate::variance::{analytic_moments, VarianceSpec};

/// Configuration of one ensemble sweep. Iterative solvers get their step
/// sizes tuned per instance (see [`SteepestDescentParams::tuned_for`] and
/// [`BPParams::tuned_for`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub n_assets: usize,
    /// Ascending scenario ratios, all strictly above 1; `p = round(alpha N)`.
    pub alpha_grid: Vec<f64>,
    /// Matrices per grid point (at least 2, for finite standard errors).
    pub samples: usize,
    pub variance: VarianceSpec,
    pub dist: ReturnDistribution,
    pub method: SolverId,
    pub base_seed: u64,
    /// Return rescaling `sqrt(gamma)` applied to every generated matrix.
    pub gamma: f64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_assets == 0 {
            return Err(Error::InvalidParameter("n_assets must be positive".into()));
        }
        if self.samples < 2 {
            return Err(Error::InvalidParameter(
                "need at least 2 samples per grid point".into(),
            ));
        }
        if self.alpha_grid.is_empty() {
            return Err(Error::InvalidParameter("alpha grid is empty".into()));
        }
        for pair in self.alpha_grid.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::InvalidParameter(
                    "alpha grid must be strictly ascending".into(),
                ));
            }
        }
        for &alpha in &self.alpha_grid {
            if !(alpha.is_finite() && alpha > 1.0) {
                return Err(Error::AlphaOutOfRange { alpha });
            }
            if scenario_count(alpha, self.n_assets) <= self.n_assets {
                return Err(Error::AlphaOutOfRange {
                    alpha: scenario_count(alpha, self.n_assets) as f64 / self.n_assets as f64,
                });
            }
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        self.variance.validate()
    }
}

fn scenario_count(alpha: f64, n_assets: usize) -> usize {
    (alpha * n_assets as f64).round() as usize
}

/// Ensemble aggregates at one grid point, over converged runs only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaRecord {
    /// Realized ratio `p / N` after rounding the scenario count.
    pub alpha: f64,
    pub p: usize,
    pub eps_mean: f64,
    pub eps_stderr: f64,
    pub qw_mean: f64,
    pub qw_stderr: f64,
    pub n_converged: usize,
    pub prediction: Prediction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepMetadata {
    pub config: SweepConfig,
    pub wall_time_secs: f64,
    pub artifact_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepResult {
    pub metadata: SweepMetadata,
    pub records: Vec<AlphaRecord>,
}

impl SweepResult {
    /// Equality of everything except the wall-time metadata.
    pub fn same_data(&self, other: &SweepResult) -> bool {
        self.records == other.records && self.metadata.config == other.metadata.config
    }
}

fn solve_instance(cfg: &SweepConfig, p: usize, seed: u64) -> Result<SolveReport> {
    let mut x = generate(cfg.n_assets, p, &cfg.variance, cfg.dist, seed)?;
    if cfg.gamma != 1.0 {
        x = rescale(&x, cfg.gamma)?;
    }
    let method = match cfg.method {
        SolverId::Exact => Method::Exact,
        SolverId::SteepestDescent => Method::SteepestDescent(SteepestDescentParams::tuned_for(&x)),
        SolverId::BeliefPropagation => {
            Method::BeliefPropagation(BPParams::tuned_for(&x, Beta::ZeroTemperatureLimit))
        }
    };
    solve(&x, &method)
}

/// Runs the full sweep. Fails if a grid point ends with zero converged
/// samples, naming the ratio and the first solver diagnostic.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let start = Instant::now();
    let moments = analytic_moments(&cfg.variance)?;

    let mut records = Vec::with_capacity(cfg.alpha_grid.len());
    for (alpha_idx, &alpha) in cfg.alpha_grid.iter().enumerate() {
        let p = scenario_count(alpha, cfg.n_assets);
        let realized_alpha = p as f64 / cfg.n_assets as f64;

        let outcomes: Vec<Result<SolveReport>> = (0..cfg.samples)
            .into_par_iter()
            .map(|r| solve_instance(cfg, p, sample_seed(cfg.base_seed, alpha_idx, r)))
            .collect();

        let mut eps = Vec::with_capacity(cfg.samples);
        let mut qw = Vec::with_capacity(cfg.samples);
        let mut first_failure: Option<String> = None;
        for outcome in &outcomes {
            match outcome {
                Ok(report) if report.converged => {
                    eps.push(report.epsilon);
                    qw.push(report.q_w);
                }
                Ok(report) => {
                    first_failure.get_or_insert(format!(
                        "{} stopped unconverged after {} iterations (residual {:.3e})",
                        report.solver, report.iterations, report.residual
                    ));
                }
                Err(e) => {
                    first_failure.get_or_insert(e.to_string());
                }
            }
        }
        if eps.is_empty() {
            return Err(Error::SweepExhausted {
                alpha: realized_alpha,
                samples: cfg.samples,
                diagnostics: first_failure.unwrap_or_else(|| "no samples ran".into()),
            });
        }

        let (eps_mean, eps_stderr) = mean_stderr(&eps);
        let (qw_mean, qw_stderr) = mean_stderr(&qw);
        let prediction = Prediction::new(realized_alpha, moments)?.scaled(cfg.gamma)?;
        records.push(AlphaRecord {
            alpha: realized_alpha,
            p,
            eps_mean,
            eps_stderr,
            qw_mean,
            qw_stderr,
            n_converged: eps.len(),
            prediction,
        });
    }

    Ok(SweepResult {
        metadata: SweepMetadata {
            config: cfg.clone(),
            wall_time_secs: start.elapsed().as_secs_f64(),
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        },
        records,
    })
}

/// Sample mean and standard error of the mean (zero for a single value).
fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Simulation-vs-prediction z-scores at one grid point; quenched deviations
/// beyond three standard errors are flagged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub alpha: f64,
    pub eps_mean: f64,
    pub qw_mean: f64,
    pub z_eps_quenched: f64,
    pub z_eps_annealed: f64,
    pub z_qw_quenched: f64,
    pub z_qw_annealed: f64,
    pub eps_quenched_outlier: bool,
    pub qw_quenched_outlier: bool,
}

pub fn compare(result: &SweepResult) -> Vec<ComparisonRow> {
    result
        .records
        .iter()
        .map(|rec| {
            let z = |mean: f64, pred: f64, stderr: f64| (mean - pred) / stderr;
            let p = &rec.prediction;
            let z_eps_quenched = z(rec.eps_mean, p.epsilon_quenched, rec.eps_stderr);
            let z_qw_quenched = z(rec.qw_mean, p.qw_quenched, rec.qw_stderr);
            ComparisonRow {
                alpha: rec.alpha,
                eps_mean: rec.eps_mean,
                qw_mean: rec.qw_mean,
                z_eps_quenched,
                z_eps_annealed: z(rec.eps_mean, p.epsilon_annealed, rec.eps_stderr),
                z_qw_quenched,
                z_qw_annealed: z(rec.qw_mean, p.qw_annealed, rec.qw_stderr),
                eps_quenched_outlier: z_eps_quenched.abs() > 3.0,
                qw_quenched_outlier: z_qw_quenched.abs() > 3.0,
            }
        })
        .collect()
}

/// Grid indices whose ensemble means move against the predicted trend
/// (risk increasing, concentration decreasing along the grid) by more than
/// `z_slack` combined standard errors.
pub fn monotonicity_violations(result: &SweepResult, z_slack: f64) -> Vec<usize> {
    let mut bad = Vec::new();
    for (i, pair) in result.records.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        let eps_band = z_slack * (a.eps_stderr.powi(2) + b.eps_stderr.powi(2)).sqrt();
        let qw_band = z_slack * (a.qw_stderr.powi(2) + b.qw_stderr.powi(2)).sqrt();
        if b.eps_mean < a.eps_mean - eps_band || b.qw_mean > a.qw_mean + qw_band {
            bad.push(i + 1);
        }
    }
    bad
}

/// Fixed header of the per-alpha CSV table.
pub const CSV_HEADER: &str =
    "alpha,p,eps_mean,eps_stderr,qw_mean,qw_stderr,eps_quenched,qw_quenched,eps_annealed,qw_annealed";

/// Renders the per-alpha table (plot-ready, no metadata).
pub fn csv_table(result: &SweepResult) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &result.records {
        let p = &r.prediction;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.alpha,
            r.p,
            r.eps_mean,
            r.eps_stderr,
            r.qw_mean,
            r.qw_stderr,
            p.epsilon_quenched,
            p.qw_quenched,
            p.epsilon_annealed,
            p.qw_annealed
        ));
    }
    out
}

/// Persists a sweep result as pretty JSON (lossless round trip).
pub fn save_json(result: &SweepResult, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(result).map_err(|e| Error::Json {
        path: path.display().to_string(),
        source: e,
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Loads a persisted sweep result; unknown or missing fields are errors,
/// and parse failures carry serde's line/column context.
pub fn load_json(path: &Path) -> Result<SweepResult> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.display().to_string(),
        source: e,
    })
}
