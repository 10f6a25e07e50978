//! Bagged ensembles of randomized SETAR trees.
//!
//! Tree `i` draws everything from the counter stream keyed by
//! `derive_key(seed, i)` in a fixed order: `alpha0`, `significance_divider`,
//! `error_threshold` (all three always drawn, each used only if the
//! randomization mode asks for it), then the row sample, then the column
//! sample. Trees therefore do not depend on each other or on thread
//! scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{create_test_set, EmbeddedMatrix, SeriesCollection};
use crate::error::{Result, SetarError};
use crate::forecast::{recursive_forecast, ForecastMatrix};
use crate::rng::{derive_key, CounterRng};
use crate::split::DEFAULT_GRID_SIZE;
use crate::stopping::{StoppingConfig, StoppingCriterion};
use crate::tree::{self, train_tree_on_rows, InputLayout, SetarTree, TreeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Randomization {
    /// Draw `alpha0` and the significance divider.
    Significance,
    /// Draw the error-reduction threshold.
    ErrorRed,
    /// Draw all three.
    Both,
}

impl Randomization {
    pub fn as_str(self) -> &'static str {
        match self {
            Randomization::Significance => "significance",
            Randomization::ErrorRed => "error-red",
            Randomization::Both => "both",
        }
    }
}

impl std::str::FromStr for Randomization {
    type Err = SetarError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "significance" => Ok(Randomization::Significance),
            "error-red" | "error_red" => Ok(Randomization::ErrorRed),
            "both" => Ok(Randomization::Both),
            other => Err(SetarError::InvalidConfig(format!("unknown randomization `{other}`"))),
        }
    }
}

/// How member forecasts are combined over the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Each tree runs its own recursion; forecasts are averaged at the end.
    #[default]
    PerTree,
    /// Trees are averaged at every step and the mean is fed back as the lag.
    StepMean,
}

impl Aggregation {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregation::PerTree => "per-tree",
            Aggregation::StepMean => "step-mean",
        }
    }
}

impl std::str::FromStr for Aggregation {
    type Err = SetarError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-tree" => Ok(Aggregation::PerTree),
            "step-mean" => Ok(Aggregation::StepMean),
            other => Err(SetarError::InvalidConfig(format!("unknown aggregation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub bagging_fraction: f64,
    pub feature_fraction: f64,
    pub seed: u64,
    pub randomization: Randomization,
    pub alpha0_range: (f64, f64),
    pub divider_range: (f64, f64),
    pub error_threshold_range: (f64, f64),
    /// Settings shared by every tree; the randomized fields are overwritten
    /// per tree and the criterion is always `Both`.
    pub base: StoppingConfig,
    pub grid_size: usize,
    pub aggregation: Aggregation,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 10,
            bagging_fraction: 0.8,
            feature_fraction: 1.0,
            seed: 0,
            randomization: Randomization::Both,
            alpha0_range: (0.01, 0.1),
            divider_range: (1.5, 5.0),
            error_threshold_range: (0.01, 0.05),
            base: StoppingConfig::default(),
            grid_size: DEFAULT_GRID_SIZE,
            aggregation: Aggregation::PerTree,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SetarError::InvalidConfig(m));
        if self.n_trees == 0 {
            return bad("forest needs at least one tree".into());
        }
        if !(self.bagging_fraction > 0.0 && self.bagging_fraction <= 1.0) {
            return bad(format!("bagging fraction must lie in (0, 1], got {}", self.bagging_fraction));
        }
        if !(self.feature_fraction > 0.0 && self.feature_fraction <= 1.0) {
            return bad(format!("feature fraction must lie in (0, 1], got {}", self.feature_fraction));
        }
        for (name, (lo, hi)) in [
            ("alpha0", self.alpha0_range),
            ("significance divider", self.divider_range),
            ("error threshold", self.error_threshold_range),
        ] {
            if !(lo <= hi) {
                return bad(format!("{name} range is empty ({lo}, {hi})"));
            }
        }
        // Range endpoints must themselves be valid tree settings.
        for (a, d, e) in [
            (self.alpha0_range.0, self.divider_range.0, self.error_threshold_range.0),
            (self.alpha0_range.1, self.divider_range.1, self.error_threshold_range.1),
        ] {
            StoppingConfig { alpha0: a, significance_divider: d, error_threshold: e, ..self.base }.validate()?;
        }
        self.base.validate()
    }

    /// Stopping settings of member `index`, drawn from its own stream.
    fn member_stopping(&self, rng: &mut CounterRng) -> StoppingConfig {
        let alpha0 = rng.uniform(self.alpha0_range.0, self.alpha0_range.1);
        let divider = rng.uniform(self.divider_range.0, self.divider_range.1);
        let threshold = rng.uniform(self.error_threshold_range.0, self.error_threshold_range.1);
        let mut s = StoppingConfig { criterion: StoppingCriterion::Both, ..self.base };
        if matches!(self.randomization, Randomization::Significance | Randomization::Both) {
            s.alpha0 = alpha0;
            s.significance_divider = divider;
        }
        if matches!(self.randomization, Randomization::ErrorRed | Randomization::Both) {
            s.error_threshold = threshold;
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestMember {
    pub tree: SetarTree,
    pub stopping: StoppingConfig,
    /// Training rows drawn for this tree; empty for forests loaded from disk.
    pub sample_rows: Vec<usize>,
    pub columns: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SetarForest {
    pub(crate) members: Vec<ForestMember>,
    pub(crate) config: ForestConfig,
}

pub fn train_forest(matrix: &EmbeddedMatrix, config: &ForestConfig) -> Result<SetarForest> {
    config.validate()?;
    if matrix.is_empty() {
        return Err(SetarError::EmptyTrainingSet);
    }
    let n = matrix.len();
    let p = matrix.n_cols();
    let n_rows = ((config.bagging_fraction * n as f64).ceil() as usize).clamp(1, n);
    let n_cols = ((config.feature_fraction * p as f64).ceil() as usize).clamp(1, p);

    let members: Vec<Result<ForestMember>> = (0..config.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = CounterRng::new(derive_key(config.seed, i as u64));
            let stopping = config.member_stopping(&mut rng);
            let rows = rng.sample_without_replacement(n, n_rows);
            let columns = (n_cols < p).then(|| rng.sample_without_replacement(p, n_cols));
            let tree_config = TreeConfig { stopping, grid_size: config.grid_size };
            let tree = match &columns {
                None => train_tree_on_rows(matrix, rows.clone(), &tree_config),
                Some(cols) => {
                    let projected = matrix.select_columns(cols)?;
                    train_tree_on_rows(&projected, rows.clone(), &tree_config).map(|mut t| {
                        t.set_layout(InputLayout {
                            n_lags: matrix.n_lags(),
                            column_names: matrix.column_names().to_vec(),
                            covariates: matrix.covariates().to_vec(),
                            projection: Some(cols.clone()),
                        });
                        t
                    })
                }
            }
            .map_err(|e| SetarError::ForestMember { index: i, source: Box::new(e) })?;
            Ok(ForestMember { tree, stopping, sample_rows: rows, columns })
        })
        .collect();

    Ok(SetarForest { members: members.into_iter().collect::<Result<_>>()?, config: *config })
}

impl SetarForest {
    pub(crate) fn from_parts(members: Vec<ForestMember>, config: ForestConfig) -> Result<Self> {
        if members.is_empty() {
            return Err(SetarError::ModelFormat("forest has no trees".into()));
        }
        let layout = members[0].tree.layout();
        if members.iter().any(|m| m.tree.n_lags() != layout.n_lags || m.tree.column_names() != layout.column_names) {
            return Err(SetarError::ModelFormat("forest members disagree on their input columns".into()));
        }
        Ok(Self { members, config })
    }

    pub fn members(&self) -> &[ForestMember] {
        &self.members
    }

    pub fn trees(&self) -> impl Iterator<Item = &SetarTree> {
        self.members.iter().map(|m| &m.tree)
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn n_lags(&self) -> usize {
        self.members[0].tree.n_lags()
    }

    /// Forecast of every member, in member order.
    pub fn member_forecasts(&self, collection: &SeriesCollection, horizon: usize) -> Result<Vec<ForecastMatrix>> {
        self.members.par_iter().map(|m| tree::forecast(&m.tree, collection, horizon)).collect()
    }
}

/// Average of the member forecasts, combined per [`ForestConfig::aggregation`].
pub fn forecast_forest(forest: &SetarForest, collection: &SeriesCollection, horizon: usize) -> Result<ForecastMatrix> {
    match forest.config.aggregation {
        Aggregation::PerTree => ForecastMatrix::mean(&forest.member_forecasts(collection, horizon)?),
        Aggregation::StepMean => {
            let layout = forest.members[0].tree.layout();
            let test = create_test_set(collection, layout.n_lags, Some(&layout.covariates))?;
            let k = forest.members.len() as f64;
            recursive_forecast(test, horizon, |x| {
                let mut sum = 0.0;
                for m in &forest.members {
                    sum += m.tree.predict(x)?;
                }
                Ok(sum / k)
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_modes() {
        assert_eq!("both".parse::<Randomization>().unwrap(), Randomization::Both);
        assert_eq!("step-mean".parse::<Aggregation>().unwrap(), Aggregation::StepMean);
        assert!("bogus".parse::<Randomization>().is_err());
    }

    #[test]
    fn config_validation() {
        ForestConfig::default().validate().unwrap();
        assert!(ForestConfig { n_trees: 0, ..Default::default() }.validate().is_err());
        assert!(ForestConfig { bagging_fraction: 0.0, ..Default::default() }.validate().is_err());
        assert!(ForestConfig { feature_fraction: 1.5, ..Default::default() }.validate().is_err());
        assert!(ForestConfig { alpha0_range: (0.2, 0.1), ..Default::default() }.validate().is_err());
        assert!(ForestConfig { divider_range: (0.5, 2.0), ..Default::default() }.validate().is_err());
    }

    #[test]
    fn randomization_modes_touch_the_right_fields() {
        let base = ForestConfig::default();
        let draw = |mode| {
            let cfg = ForestConfig { randomization: mode, ..base };
            cfg.member_stopping(&mut CounterRng::new(5))
        };
        let sig = draw(Randomization::Significance);
        assert_ne!(sig.alpha0, 0.05);
        assert_eq!(sig.error_threshold, 0.03);
        let err = draw(Randomization::ErrorRed);
        assert_eq!((err.alpha0, err.significance_divider), (0.05, 2.0));
        assert_ne!(err.error_threshold, 0.03);
        let both = draw(Randomization::Both);
        assert_eq!(both.alpha0, sig.alpha0);
        assert_eq!(both.error_threshold, err.error_threshold);
        assert_eq!(both.criterion, StoppingCriterion::Both);
        assert!((0.01..=0.1).contains(&both.alpha0));
        assert!((1.5..=5.0).contains(&both.significance_divider));
        assert!((0.01..=0.05).contains(&both.error_threshold));
    }
}
