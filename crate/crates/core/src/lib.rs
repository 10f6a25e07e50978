//! Global time-series forecasting with SETAR trees and forests.
//!
//! Series are embedded into a pooled lag matrix, a tree partitions the rows
//! by thresholds on lags or covariates and fits a linear autoregression in
//! every leaf, and multi-step forecasts are produced recursively.

pub mod data;
pub mod dgp;
pub mod error;
pub mod fdist;
pub mod forecast;
pub mod forest;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod model_io;
pub mod rng;
pub mod split;
pub mod stopping;
pub mod tree;

pub use data::{
    create_input_matrix, create_test_set, update_test_set, CovariateDef, CovariateKind, CovariateSpec, CovariateValue,
    EmbeddedMatrix, Frequency, Series, SeriesCollection, TestSet,
};
pub use error::{ErrorCategory, Result, SetarError};
pub use forecast::ForecastMatrix;
pub use forest::{forecast_forest, train_forest, Aggregation, ForestConfig, Randomization, SetarForest};
pub use linalg::LinearFit;
pub use metrics::{evaluate, heuristic_lags, mase, msmape, EvaluationReport};
pub use split::SplitDecision;
pub use stopping::{StoppingConfig, StoppingCriterion};
pub use tree::{forecast, train_pr_baseline, train_tree, SetarTree, TreeConfig};
