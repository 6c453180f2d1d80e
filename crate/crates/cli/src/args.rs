//! Flag definitions and the small parsers shared by the subcommands:
//! alpha-grid syntax, variance flags vs presets, and the plain-text
//! key/value config file.

use clap::{Args, Parser, Subcommand, ValueEnum};
use minrisk::market::ReturnDistribution;
use minrisk::model::SolverId;
use minrisk::variance::VarianceSpec;

use crate::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "minrisk",
    version,
    about = "Minimum-variance portfolios under a budget constraint: solvers, \
             closed-form predictions, and Monte Carlo ensemble verification",
    subcommand_required = true,
    arg_required_else_help = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Base seed for all randomness (env MINRISK_SEED).
    #[arg(long, global = true, env = "MINRISK_SEED")]
    pub seed: Option<u64>,

    /// Write data output to this file instead of stdout.
    #[arg(long, short = 'o', global = true)]
    pub output: Option<std::path::PathBuf>,

    /// Data output format for tables.
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,

    /// Increase stderr chatter (-v, -vv).
    #[arg(short = 'v', long = "verbose", global = true, action = clap::ArgAction::Count)]
    pub verbosity: u8,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Emit the closed-form prediction curves over an alpha grid.
    Predict(PredictArgs),
    /// Generate a return matrix and its variance file.
    Gen(GenArgs),
    /// Solve one instance read from disk and print the report as JSON.
    Solve(SolveArgs),
    /// Run a Monte Carlo sweep over an alpha grid.
    Simulate(SimulateArgs),
    /// Compare a saved sweep against its predictions (z-scores).
    Compare(CompareArgs),
    /// Re-run the ensemble experiments behind one of the four figures.
    Reproduce(ReproduceArgs),
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    /// Alpha grid as min:max:steps (all alphas must exceed 1).
    #[arg(long, default_value = "1.5:10:18")]
    pub alpha: String,
    #[command(flatten)]
    pub variance: VarianceArgs,
    /// Return-scale factor applied to the risk curves.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, default_value_t = 200)]
    pub n_assets: usize,
    /// Scenario count; alternatively derive it from --alpha.
    #[arg(long, conflicts_with = "alpha")]
    pub n_scenarios: Option<usize>,
    /// Scenario ratio; p = round(alpha * N).
    #[arg(long)]
    pub alpha: Option<f64>,
    #[command(flatten)]
    pub variance: VarianceArgs,
    #[arg(long, value_parser = parse_distribution, default_value = "gaussian")]
    pub dist: ReturnDistribution,
    /// Where to write the matrix CSV.
    #[arg(long, default_value = "matrix.csv")]
    pub matrix: std::path::PathBuf,
    /// Where to write the variances file.
    #[arg(long, default_value = "variances.txt")]
    pub variances: std::path::PathBuf,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long)]
    pub matrix: std::path::PathBuf,
    #[arg(long)]
    pub variances: std::path::PathBuf,
    #[arg(long, value_parser = parse_method, default_value = "exact")]
    pub method: SolverId,
    /// Portfolio step size (steepest descent); default adapts to the instance.
    #[arg(long)]
    pub eta_w: Option<f64>,
    /// Multiplier step size (steepest descent).
    #[arg(long)]
    pub eta_zeta: Option<f64>,
    /// L1 stopping threshold of the iterative solvers.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Finite inverse temperature for belief propagation
    /// (omit for the zero-temperature limit).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Message damping in [0,1) (belief propagation).
    #[arg(long)]
    pub damping: Option<f64>,
    /// Budget-multiplier step (belief propagation); default adapts.
    #[arg(long)]
    pub k_step: Option<f64>,
    /// Use the reference step sizes (100/N, 1/N) instead of adapting them.
    #[arg(long)]
    pub reference_steps: bool,
}

#[derive(Args, Debug, Clone)]
pub struct SimulateArgs {
    /// Plain-text key/value config file; explicit flags override it.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    #[arg(long)]
    pub n_assets: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Alpha grid: min:max:steps or a comma-separated list.
    #[arg(long)]
    pub alpha: Option<String>,
    #[command(flatten)]
    pub variance: VarianceArgs,
    #[arg(long, value_parser = parse_distribution)]
    pub dist: Option<ReturnDistribution>,
    #[arg(long, value_parser = parse_method)]
    pub method: Option<SolverId>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Also persist the full result (with metadata) to this JSON file.
    #[arg(long)]
    pub save: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// A sweep result saved by `simulate --save`.
    #[arg(long)]
    pub input: std::path::PathBuf,
}

#[derive(Args, Debug)]
pub struct ReproduceArgs {
    /// Which figure's experiments to run.
    #[arg(value_enum)]
    pub figure: Figure,
    #[arg(long, default_value_t = 200)]
    pub n_assets: usize,
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    /// Alpha grid of the simulated points.
    #[arg(long, default_value = "1.5:10:18")]
    pub alpha: String,
    #[arg(long, value_parser = parse_method, default_value = "sd")]
    pub method: SolverId,
    #[arg(long, default_value = ".")]
    pub out_dir: std::path::PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl Figure {
    /// The three variance presets behind the figure.
    pub fn presets(self) -> [&'static str; 3] {
        match self {
            Figure::Fig2 | Figure::Fig3 => ["1A", "1B", "1C"],
            Figure::Fig4 | Figure::Fig5 => ["2A'", "2B'", "2C'"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
        }
    }
}

/// A variance distribution given either as a named preset or an explicit
/// spec string; the two flags are mutually exclusive.
#[derive(Args, Debug, Clone)]
pub struct VarianceArgs {
    /// Named setting: 1A, 1B, 1C, 2A', 2B' or 2C'.
    #[arg(long, conflicts_with = "variance")]
    pub preset: Option<String>,
    /// Explicit spec, e.g. identical:s=1, two-point:r=0.84,s=0.0741,
    /// uniform:l=1,u=2, explicit:v1,v2,...
    #[arg(long)]
    pub variance: Option<String>,
}

impl VarianceArgs {
    /// Resolves the flags, or falls back to the given default.
    pub fn resolve(&self, default: Option<VarianceSpec>) -> Result<VarianceSpec, CliError> {
        match (&self.preset, &self.variance) {
            (Some(name), None) => VarianceSpec::preset(name).map_err(usage),
            (None, Some(text)) => text.parse().map_err(usage),
            (None, None) => default.ok_or_else(|| {
                CliError::Usage(
                    "a variance distribution is required: pass --preset or --variance".into(),
                )
            }),
            (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
        }
    }
}

fn usage(e: minrisk::Error) -> CliError {
    CliError::Usage(e.to_string())
}

pub fn parse_method(text: &str) -> Result<SolverId, String> {
    match text.trim().to_ascii_lowercase().as_str() {
        "exact" => Ok(SolverId::Exact),
        "sd" | "steepest-descent" => Ok(SolverId::SteepestDescent),
        "bp" | "belief-propagation" => Ok(SolverId::BeliefPropagation),
        other => Err(format!(
            "unknown method {other:?}; expected exact, sd or bp"
        )),
    }
}

pub fn parse_distribution(text: &str) -> Result<ReturnDistribution, String> {
    text.parse().map_err(|e: minrisk::Error| e.to_string())
}

/// Parses `min:max:steps` (inclusive linspace) or a comma-separated list
/// into an ascending alpha grid; every entry must exceed 1.
pub fn parse_alpha_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let grid = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::Usage(format!(
                "cannot parse alpha grid {text:?}; expected min:max:steps"
            )));
        }
        let min: f64 = parse_num(parts[0], text)?;
        let max: f64 = parse_num(parts[1], text)?;
        let steps: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("bad step count in alpha grid {text:?}")))?;
        if steps == 0 {
            return Err(CliError::Usage(
                "alpha grid needs at least one point".into(),
            ));
        }
        if steps == 1 {
            vec![min]
        } else {
            if max <= min {
                return Err(CliError::Usage(format!(
                    "alpha grid {text:?} must have max > min"
                )));
            }
            let h = (max - min) / (steps - 1) as f64;
            (0..steps).map(|k| min + h * k as f64).collect()
        }
    } else {
        text.split(',')
            .filter(|part| !part.trim().is_empty())
            .map(|part| parse_num(part, text))
            .collect::<Result<Vec<f64>, CliError>>()?
    };
    if grid.is_empty() {
        return Err(CliError::Usage("alpha grid is empty".into()));
    }
    for &alpha in &grid {
        if !(alpha.is_finite() && alpha > 1.0) {
            return Err(CliError::Usage(format!(
                "alpha = {alpha} is out of range: the scenario ratio must exceed 1 \
                 (the optimum is not unique otherwise)"
            )));
        }
    }
    for pair in grid.windows(2) {
        if pair[1] <= pair[0] {
            return Err(CliError::Usage(
                "alpha grid must be strictly ascending".into(),
            ));
        }
    }
    Ok(grid)
}

fn parse_num(part: &str, whole: &str) -> Result<f64, CliError> {
    part.trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("bad number {part:?} in alpha grid {whole:?}")))
}

/// One `key = value` per line, `#` comments. Recognized keys:
/// n_assets, samples, alpha, preset, variance, dist, method, seed, gamma.
#[derive(Debug, Default)]
pub struct FileConfig {
    pub n_assets: Option<usize>,
    pub samples: Option<usize>,
    pub alpha: Option<String>,
    pub preset: Option<String>,
    pub variance: Option<String>,
    pub dist: Option<ReturnDistribution>,
    pub method: Option<SolverId>,
    pub seed: Option<u64>,
    pub gamma: Option<f64>,
}

pub fn read_config(path: &std::path::Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    let mut cfg = FileConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad =
            |msg: String| CliError::Usage(format!("{} line {}: {msg}", path.display(), idx + 1));
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("expected key = value, got {line:?}")))?;
        let value = value.trim();
        match key.trim() {
            "n_assets" => {
                cfg.n_assets = Some(
                    value
                        .parse()
                        .map_err(|_| bad(format!("bad integer {value:?}")))?,
                )
            }
            "samples" => {
                cfg.samples = Some(
                    value
                        .parse()
                        .map_err(|_| bad(format!("bad integer {value:?}")))?,
                )
            }
            "alpha" => cfg.alpha = Some(value.to_string()),
            "preset" => cfg.preset = Some(value.to_string()),
            "variance" => cfg.variance = Some(value.to_string()),
            "dist" => cfg.dist = Some(parse_distribution(value).map_err(bad)?),
            "method" => cfg.method = Some(parse_method(value).map_err(bad)?),
            "seed" => {
                cfg.seed = Some(
                    value
                        .parse()
                        .map_err(|_| bad(format!("bad seed {value:?}")))?,
                )
            }
            "gamma" => {
                cfg.gamma = Some(
                    value
                        .parse()
                        .map_err(|_| bad(format!("bad number {value:?}")))?,
                )
            }
            other => return Err(bad(format!("unknown key {other:?}"))),
        }
    }
    if cfg.preset.is_some() && cfg.variance.is_some() {
        return Err(CliError::Usage(format!(
            "{}: preset and variance are mutually exclusive",
            path.display()
        )));
    }
    Ok(cfg)
}
