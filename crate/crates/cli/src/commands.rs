//! The six subcommand implementations. Data goes to stdout (or `--output`),
//! diagnostics to stderr; outputs are deterministic for fixed flags and
//! seed (wall-time metadata only ever goes into `--save` files).

use std::path::PathBuf;

use serde::Serialize;

use minrisk::analytic::Prediction;
use minrisk::experiment::{
    self, compare, csv_table, run_sweep, ComparisonRow, SweepConfig, SweepResult,
};
use minrisk::market::ReturnDistribution;
use minrisk::model::{budget_residual, SolveReport, SolverId};
use minrisk::solvers::{BPParams, Beta, Method, SteepestDescentParams};
use minrisk::variance::{analytic_moments, VarianceSpec};
use minrisk::{io as mio, market};

use crate::args::{
    parse_alpha_grid, read_config, CompareArgs, GenArgs, OutputFormat, PredictArgs, ReproduceArgs,
    SimulateArgs, SolveArgs,
};
use crate::CliError;

pub struct Ctx {
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
    pub verbosity: u8,
}

impl Ctx {
    fn emit(&self, data: &str) -> Result<(), CliError> {
        match &self.output {
            Some(path) => std::fs::write(path, data)
                .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display()))),
            None => {
                print!("{data}");
                Ok(())
            }
        }
    }

    fn note(&self, level: u8, text: impl AsRef<str>) {
        if self.verbosity >= level {
            eprintln!("{}", text.as_ref());
        }
    }
}

fn runtime(e: minrisk::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Serialize)]
struct PredictRow {
    alpha: f64,
    eps_quenched: f64,
    qw_quenched: f64,
    eps_annealed: f64,
    qw_annealed: f64,
}

const PREDICT_HEADER: &str = "alpha,eps_quenched,qw_quenched,eps_annealed,qw_annealed";

fn prediction_rows(
    grid: &[f64],
    spec: &VarianceSpec,
    gamma: f64,
) -> Result<Vec<PredictRow>, CliError> {
    let moments = analytic_moments(spec).map_err(|e| CliError::Usage(e.to_string()))?;
    grid.iter()
        .map(|&alpha| {
            let p = Prediction::new(alpha, moments)
                .and_then(|p| p.scaled(gamma))
                .map_err(|e| CliError::Usage(e.to_string()))?;
            Ok(PredictRow {
                alpha,
                eps_quenched: p.epsilon_quenched,
                qw_quenched: p.qw_quenched,
                eps_annealed: p.epsilon_annealed,
                qw_annealed: p.qw_annealed,
            })
        })
        .collect()
}

fn predict_table(rows: &[PredictRow], format: OutputFormat) -> Result<String, CliError> {
    match format {
        OutputFormat::Csv => {
            let mut out = String::from(PREDICT_HEADER);
            out.push('\n');
            for r in rows {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.alpha, r.eps_quenched, r.qw_quenched, r.eps_annealed, r.qw_annealed
                ));
            }
            Ok(out)
        }
        OutputFormat::Json => {
            let mut text =
                serde_json::to_string_pretty(rows).map_err(|e| CliError::Runtime(e.to_string()))?;
            text.push('\n');
            Ok(text)
        }
    }
}

pub fn run_predict(ctx: &Ctx, args: &PredictArgs) -> Result<(), CliError> {
    let grid = parse_alpha_grid(&args.alpha)?;
    if !(args.gamma.is_finite() && args.gamma > 0.0) {
        return Err(CliError::Usage(format!(
            "gamma must be positive, got {}",
            args.gamma
        )));
    }
    let spec = args.variance.resolve(None)?;
    let rows = prediction_rows(&grid, &spec, args.gamma)?;
    ctx.emit(&predict_table(&rows, ctx.format)?)
}

pub fn run_gen(ctx: &Ctx, args: &GenArgs) -> Result<(), CliError> {
    let spec = args.variance.resolve(None)?;
    let p = match (args.n_scenarios, args.alpha) {
        (Some(p), None) => p,
        (None, Some(alpha)) => {
            if !(alpha.is_finite() && alpha > 0.0) {
                return Err(CliError::Usage(format!("bad alpha {alpha}")));
            }
            (alpha * args.n_assets as f64).round() as usize
        }
        (None, None) => {
            return Err(CliError::Usage(
                "pass --n-scenarios or --alpha to size the matrix".into(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
    };
    let x = market::generate(args.n_assets, p, &spec, args.dist, ctx.seed).map_err(runtime)?;
    mio::write_matrix_csv(&x, &args.matrix).map_err(runtime)?;
    mio::write_variances(x.variances(), &args.variances).map_err(runtime)?;
    ctx.note(
        1,
        format!(
            "wrote {} ({}x{}) and {}",
            args.matrix.display(),
            args.n_assets,
            p,
            args.variances.display()
        ),
    );
    Ok(())
}

/// The published report shape of `solve`.
#[derive(Serialize)]
struct SolveSummary {
    solver: String,
    epsilon: f64,
    q_w: f64,
    budget_residual: f64,
    iterations: usize,
    converged: bool,
}

impl SolveSummary {
    fn from_report(report: &SolveReport) -> Self {
        Self {
            solver: report.solver.to_string(),
            epsilon: report.epsilon,
            q_w: report.q_w,
            budget_residual: budget_residual(&report.portfolio, report.portfolio.n_assets()),
            iterations: report.iterations,
            converged: report.converged,
        }
    }
}

pub fn run_solve(ctx: &Ctx, args: &SolveArgs) -> Result<(), CliError> {
    let x = mio::read_matrix_csv(&args.matrix, &args.variances).map_err(runtime)?;
    let method = match args.method {
        SolverId::Exact => Method::Exact,
        SolverId::SteepestDescent => {
            let mut params = if args.reference_steps {
                SteepestDescentParams::for_assets(x.n_assets())
            } else {
                SteepestDescentParams::tuned_for(&x)
            };
            if let Some(v) = args.eta_w {
                params.eta_w = v;
            }
            if let Some(v) = args.eta_zeta {
                params.eta_zeta = v;
            }
            if let Some(v) = args.delta {
                params.delta = v;
            }
            if let Some(v) = args.max_iters {
                params.max_iters = v;
            }
            Method::SteepestDescent(params)
        }
        SolverId::BeliefPropagation => {
            let beta = match args.beta {
                Some(b) => Beta::Finite(b),
                None => Beta::ZeroTemperatureLimit,
            };
            let mut params = if args.reference_steps {
                BPParams {
                    beta,
                    ..BPParams::for_assets(x.n_assets())
                }
            } else {
                BPParams::tuned_for(&x, beta)
            };
            if let Some(v) = args.damping {
                params.damping = v;
            }
            if let Some(v) = args.k_step {
                params.k_step = v;
            }
            if let Some(v) = args.delta {
                params.delta = v;
            }
            if let Some(v) = args.max_iters {
                params.max_iters = v;
            }
            Method::BeliefPropagation(params)
        }
    };
    let report = minrisk::solvers::solve(&x, &method).map_err(runtime)?;
    ctx.note(
        1,
        format!(
            "{} finished after {} iterations, residual {:.3e}",
            report.solver, report.iterations, report.residual
        ),
    );
    if let Some(bp) = &report.bp {
        ctx.note(
            1,
            format!(
                "mean chi_w {:.6e}, mean chi_u {:.6e}",
                bp.mean_chi_w, bp.mean_chi_u
            ),
        );
    }
    let mut text = serde_json::to_string_pretty(&SolveSummary::from_report(&report))
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    ctx.emit(&text)?;
    if !report.converged {
        return Err(CliError::Runtime(format!(
            "{} did not converge within {} iterations (residual {:.3e})",
            report.solver, report.iterations, report.residual
        )));
    }
    Ok(())
}

fn sweep_output(ctx: &Ctx, result: &SweepResult) -> Result<(), CliError> {
    let data = match ctx.format {
        OutputFormat::Csv => csv_table(result),
        OutputFormat::Json => {
            let mut text = serde_json::to_string_pretty(&result.records)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            text.push('\n');
            text
        }
    };
    ctx.emit(&data)
}

pub fn run_simulate(ctx: &Ctx, args: &SimulateArgs) -> Result<(), CliError> {
    let file = match &args.config {
        Some(path) => read_config(path)?,
        None => Default::default(),
    };
    // precedence: explicit flag, then config file, then built-in default
    let spec = match (&args.variance.preset, &args.variance.variance) {
        (None, None) => match (&file.preset, &file.variance) {
            (Some(name), None) => {
                VarianceSpec::preset(name).map_err(|e| CliError::Usage(e.to_string()))?
            }
            (None, Some(text)) => text
                .parse::<VarianceSpec>()
                .map_err(|e| CliError::Usage(e.to_string()))?,
            _ => VarianceSpec::Identical { s: 1.0 },
        },
        _ => args.variance.resolve(None)?,
    };
    let alpha_text = args
        .alpha
        .clone()
        .or(file.alpha)
        .unwrap_or_else(|| "1.5:10:18".to_string());
    let cfg = SweepConfig {
        n_assets: args.n_assets.or(file.n_assets).unwrap_or(200),
        alpha_grid: parse_alpha_grid(&alpha_text)?,
        samples: args.samples.or(file.samples).unwrap_or(50),
        variance: spec,
        dist: args
            .dist
            .or(file.dist)
            .unwrap_or(ReturnDistribution::Gaussian),
        method: args.method.or(file.method).unwrap_or(SolverId::Exact),
        base_seed: file
            .seed
            .map_or(ctx.seed, |s| if ctx.seed != 0 { ctx.seed } else { s }),
        gamma: args.gamma.or(file.gamma).unwrap_or(1.0),
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    ctx.note(
        1,
        format!(
            "sweeping {} grid points, {} samples each, N = {}",
            cfg.alpha_grid.len(),
            cfg.samples,
            cfg.n_assets
        ),
    );
    let result = run_sweep(&cfg).map_err(runtime)?;
    ctx.note(
        1,
        format!("sweep finished in {:.2}s", result.metadata.wall_time_secs),
    );
    if let Some(path) = &args.save {
        experiment::save_json(&result, path).map_err(runtime)?;
        ctx.note(1, format!("saved full result to {}", path.display()));
    }
    sweep_output(ctx, &result)
}

const COMPARE_HEADER: &str = "alpha,eps_mean,qw_mean,z_eps_quenched,z_eps_annealed,\
z_qw_quenched,z_qw_annealed,eps_quenched_outlier,qw_quenched_outlier";

fn comparison_table(rows: &[ComparisonRow], format: OutputFormat) -> Result<String, CliError> {
    match format {
        OutputFormat::Csv => {
            let mut out = String::from(COMPARE_HEADER);
            out.push('\n');
            for r in rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    r.alpha,
                    r.eps_mean,
                    r.qw_mean,
                    r.z_eps_quenched,
                    r.z_eps_annealed,
                    r.z_qw_quenched,
                    r.z_qw_annealed,
                    r.eps_quenched_outlier,
                    r.qw_quenched_outlier
                ));
            }
            Ok(out)
        }
        OutputFormat::Json => {
            let mut text =
                serde_json::to_string_pretty(rows).map_err(|e| CliError::Runtime(e.to_string()))?;
            text.push('\n');
            Ok(text)
        }
    }
}

pub fn run_compare(ctx: &Ctx, args: &CompareArgs) -> Result<(), CliError> {
    let result = experiment::load_json(&args.input).map_err(runtime)?;
    let rows = compare(&result);
    let outliers = rows
        .iter()
        .filter(|r| r.eps_quenched_outlier || r.qw_quenched_outlier)
        .count();
    ctx.note(
        1,
        format!(
            "{} of {} grid points deviate from the quenched prediction by more than 3 sigma",
            outliers,
            rows.len()
        ),
    );
    ctx.emit(&comparison_table(&rows, ctx.format)?)
}

fn preset_file_stem(preset: &str) -> String {
    preset.replace('\'', "p")
}

pub fn run_reproduce(ctx: &Ctx, args: &ReproduceArgs) -> Result<(), CliError> {
    let grid = parse_alpha_grid(&args.alpha)?;
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", args.out_dir.display())))?;
    let curve_grid: Vec<f64> = {
        let (lo, hi, steps) = (1.1, 10.0, 90);
        let h = (hi - lo) / (steps - 1) as f64;
        (0..steps).map(|k| lo + h * k as f64).collect()
    };

    let mut written = Vec::new();
    for (idx, preset) in args.figure.presets().iter().enumerate() {
        let spec = VarianceSpec::preset(preset).map_err(|e| CliError::Usage(e.to_string()))?;
        let cfg = SweepConfig {
            n_assets: args.n_assets,
            alpha_grid: grid.clone(),
            samples: args.samples,
            variance: spec.clone(),
            dist: ReturnDistribution::Gaussian,
            method: args.method,
            base_seed: ctx.seed.wrapping_add(idx as u64),
            gamma: 1.0,
        };
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        ctx.note(1, format!("running preset {preset}"));
        let result = run_sweep(&cfg).map_err(runtime)?;

        let stem = preset_file_stem(preset);
        let sim_path = args
            .out_dir
            .join(format!("{}_{}_sim.csv", args.figure.name(), stem));
        std::fs::write(&sim_path, csv_table(&result))
            .map_err(|e| CliError::Runtime(format!("{}: {e}", sim_path.display())))?;
        written.push(sim_path);

        let rows = prediction_rows(&curve_grid, &spec, 1.0)?;
        let curve_path = args
            .out_dir
            .join(format!("{}_{}_curves.csv", args.figure.name(), stem));
        std::fs::write(&curve_path, predict_table(&rows, OutputFormat::Csv)?)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", curve_path.display())))?;
        written.push(curve_path);
    }

    let listing: String = written
        .iter()
        .map(|p| format!("{}\n", p.display()))
        .collect();
    ctx.emit(&listing)
}
