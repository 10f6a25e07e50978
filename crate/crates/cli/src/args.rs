use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use setar_core::forest::{Aggregation, Randomization};
use setar_core::stopping::{StoppingConfig, StoppingCriterion};
use setar_core::{ForestConfig, TreeConfig};

#[derive(Parser, Debug)]
#[command(name = "setar", version, about = "Train, forecast and evaluate SETAR trees and forests on collections of series")]
pub struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true, env = "SETAR_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic collection in the values format.
    Simulate(SimulateArgs),
    /// Train a SETAR tree (or the pooled-regression baseline).
    Train(TrainArgs),
    /// Train a SETAR forest.
    TrainForest(TrainForestArgs),
    /// Forecast with a saved tree or forest.
    Forecast(ForecastArgs),
    /// Score a forecast CSV against actuals.
    Evaluate(EvaluateArgs),
    /// Hold out the last `horizon` points, train, forecast and evaluate.
    Run(RunArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum DgpName {
    ChaoticLogistic,
    MackeyGlass,
    Setar2,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum CriterionArg {
    LinTest,
    ErrorRed,
    Both,
}

impl From<CriterionArg> for StoppingCriterion {
    fn from(c: CriterionArg) -> Self {
        match c {
            CriterionArg::LinTest => StoppingCriterion::LinTest,
            CriterionArg::ErrorRed => StoppingCriterion::ErrorRed,
            CriterionArg::Both => StoppingCriterion::Both,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum RandomizeArg {
    Significance,
    ErrorRed,
    Both,
}

impl From<RandomizeArg> for Randomization {
    fn from(r: RandomizeArg) -> Self {
        match r {
            RandomizeArg::Significance => Randomization::Significance,
            RandomizeArg::ErrorRed => Randomization::ErrorRed,
            RandomizeArg::Both => Randomization::Both,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum AggregationArg {
    PerTree,
    StepMean,
}

impl From<AggregationArg> for Aggregation {
    fn from(a: AggregationArg) -> Self {
        match a {
            AggregationArg::PerTree => Aggregation::PerTree,
            AggregationArg::StepMean => Aggregation::StepMean,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Baseline {
    Pr,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub kind: DgpName,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 600)]
    pub length: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Standard deviation of the dynamic noise (chaotic-logistic and setar2 only).
    #[arg(long)]
    pub noise_sd: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Write only the first `length - H` points to `--out` and the last H to `--actuals-out`.
    #[arg(long, requires = "actuals_out")]
    pub holdout: Option<usize>,
    #[arg(long, requires = "holdout")]
    pub actuals_out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Values file (`id:v1,v2,...`) or long CSV (`series_id,timestep,value[,covariates]`).
    #[arg(long)]
    pub input: PathBuf,
    /// `key=value` file declaring covariate kinds and the frequency.
    #[arg(long)]
    pub input_config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct LagArgs {
    /// Number of lags; chosen from the seasonality and horizon when omitted.
    #[arg(long)]
    pub lag: Option<usize>,
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Seasonal period; overrides the frequency in the input config.
    #[arg(long)]
    pub seasonality: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct StoppingArgs {
    #[arg(long, value_enum, default_value = "both")]
    pub stopping: CriterionArg,
    #[arg(long, default_value_t = 0.05)]
    pub alpha0: f64,
    #[arg(long, default_value_t = 2.0)]
    pub sig_divider: f64,
    #[arg(long, default_value_t = 0.03)]
    pub error_threshold: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_depth: usize,
    /// Number of quantile thresholds tried per column.
    #[arg(long, default_value_t = 15)]
    pub grid_size: usize,
}

impl StoppingArgs {
    pub fn tree_config(&self) -> TreeConfig {
        TreeConfig {
            stopping: StoppingConfig {
                criterion: self.stopping.into(),
                alpha0: self.alpha0,
                significance_divider: self.sig_divider,
                error_threshold: self.error_threshold,
                max_depth: self.max_depth,
            },
            grid_size: self.grid_size,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct ForestArgs {
    #[arg(long, default_value_t = 10)]
    pub trees: usize,
    #[arg(long, default_value_t = 0.8)]
    pub bagging_fraction: f64,
    #[arg(long, default_value_t = 1.0)]
    pub feature_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "both")]
    pub randomize: RandomizeArg,
    #[arg(long, value_enum, default_value = "per-tree")]
    pub aggregation: AggregationArg,
    #[arg(long, default_value_t = 1000)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 15)]
    pub grid_size: usize,
}

impl ForestArgs {
    pub fn forest_config(&self) -> ForestConfig {
        let defaults = ForestConfig::default();
        ForestConfig {
            n_trees: self.trees,
            bagging_fraction: self.bagging_fraction,
            feature_fraction: self.feature_fraction,
            seed: self.seed,
            randomization: self.randomize.into(),
            aggregation: self.aggregation.into(),
            grid_size: self.grid_size,
            base: StoppingConfig { max_depth: self.max_depth, ..defaults.base },
            ..defaults
        }
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub lag: LagArgs,
    #[command(flatten)]
    pub stopping: StoppingArgs,
    /// Fit a single pooled regression instead of growing a tree.
    #[arg(long, value_enum)]
    pub baseline: Option<Baseline>,
    #[arg(long)]
    pub model_out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainForestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub lag: LagArgs,
    #[command(flatten)]
    pub forest: ForestArgs,
    #[arg(long)]
    pub model_out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ForecastArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub horizon: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub forecasts: PathBuf,
    #[arg(long)]
    pub actuals: PathBuf,
    #[arg(long)]
    pub training: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seasonality: usize,
    #[arg(long, default_value_t = setar_core::metrics::DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub lag: Option<usize>,
    #[arg(long)]
    pub horizon: usize,
    /// Seasonal period for the lag heuristic and MASE; defaults to the input frequency, else 1.
    #[arg(long)]
    pub seasonality: Option<usize>,
    #[command(flatten)]
    pub stopping: StoppingArgs,
    /// Train a forest instead of a single tree.
    #[arg(long, conflicts_with = "baseline")]
    pub forest: bool,
    #[arg(long, default_value_t = 10)]
    pub trees: usize,
    #[arg(long, default_value_t = 0.8)]
    pub bagging_fraction: f64,
    #[arg(long, default_value_t = 1.0)]
    pub feature_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "both")]
    pub randomize: RandomizeArg,
    #[arg(long, value_enum, default_value = "per-tree")]
    pub aggregation: AggregationArg,
    #[arg(long, value_enum)]
    pub baseline: Option<Baseline>,
    #[arg(long, default_value_t = setar_core::metrics::DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Forecast CSV for the held-out horizon.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub model_out: Option<PathBuf>,
}

impl RunArgs {
    pub fn forest_args(&self) -> ForestArgs {
        ForestArgs {
            trees: self.trees,
            bagging_fraction: self.bagging_fraction,
            feature_fraction: self.feature_fraction,
            seed: self.seed,
            randomize: self.randomize,
            aggregation: self.aggregation,
            max_depth: self.stopping.max_depth,
            grid_size: self.stopping.grid_size,
        }
    }
}
