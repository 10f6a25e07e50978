//! Series collections, the pooled lag-embedding matrix, covariate encoding and
//! the rolling test set used for recursive forecasting.
//!
//! Lag columns are named `L1..Ln` with `L1` the most recent value. Covariate
//! columns follow the lags and are aligned to the time index of the target.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SetarError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovariateKind {
    Numeric,
    Categorical,
}

impl CovariateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CovariateKind::Numeric => "numeric",
            CovariateKind::Categorical => "categorical",
        }
    }
}

impl std::str::FromStr for CovariateKind {
    type Err = SetarError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "numeric" => Ok(CovariateKind::Numeric),
            "categorical" => Ok(CovariateKind::Categorical),
            other => Err(SetarError::InvalidConfig(format!("unknown covariate kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CovariateValue {
    Numeric(f64),
    Category(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CovariateDef {
    pub name: String,
    pub kind: CovariateKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    Daily,
    Monthly,
    Quarterly,
    #[default]
    None,
}

impl Frequency {
    /// Length of the seasonal cycle implied by the frequency, if any.
    pub fn seasonality(self) -> Option<usize> {
        match self {
            Frequency::Daily => Some(7),
            Frequency::Monthly => Some(12),
            Frequency::Quarterly => Some(4),
            Frequency::None => None,
        }
    }
}

/// One univariate series with optional covariates.
///
/// `covariates[k]` is aligned with `values`; `future_covariates[k]` holds the
/// exogenous values for the steps after the last observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub id: String,
    pub values: Vec<f64>,
    pub covariates: Vec<Vec<CovariateValue>>,
    pub future_covariates: Vec<Vec<CovariateValue>>,
}

impl Series {
    pub fn new(id: impl Into<String>, values: Vec<f64>) -> Self {
        Self { id: id.into(), values, covariates: Vec::new(), future_covariates: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesCollection {
    series: Vec<Series>,
    covariates: Vec<CovariateDef>,
    frequency: Frequency,
}

impl SeriesCollection {
    pub fn new(series: Vec<Series>, covariates: Vec<CovariateDef>, frequency: Frequency) -> Result<Self> {
        let mut seen = HashSet::new();
        for s in &series {
            if !seen.insert(s.id.as_str()) {
                return Err(SetarError::DuplicateSeriesId(s.id.clone()));
            }
            if let Some(index) = s.values.iter().position(|v| !v.is_finite()) {
                return Err(SetarError::NonFiniteValue { id: s.id.clone(), index });
            }
            if s.covariates.len() != covariates.len()
                || (!s.future_covariates.is_empty() && s.future_covariates.len() != covariates.len())
            {
                let name = covariates.first().map(|c| c.name.clone()).unwrap_or_default();
                return Err(SetarError::CovariateMisaligned { name, id: s.id.clone() });
            }
            for (k, def) in covariates.iter().enumerate() {
                if s.covariates[k].len() != s.values.len() {
                    return Err(SetarError::CovariateMisaligned { name: def.name.clone(), id: s.id.clone() });
                }
                let future = s.future_covariates.get(k).map(Vec::as_slice).unwrap_or(&[]);
                let kind_ok = s.covariates[k].iter().chain(future).all(|v| {
                    matches!(
                        (def.kind, v),
                        (CovariateKind::Numeric, CovariateValue::Numeric(x)) if x.is_finite()
                    ) || matches!((def.kind, v), (CovariateKind::Categorical, CovariateValue::Category(_)))
                });
                if !kind_ok {
                    return Err(SetarError::CovariateMisaligned { name: def.name.clone(), id: s.id.clone() });
                }
            }
        }
        Ok(Self { series, covariates, frequency })
    }

    /// Collection of plain series without covariates.
    pub fn from_values<I, S>(items: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let series = items.into_iter().map(|(id, v)| Series::new(id, v)).collect();
        Self::new(series, Vec::new(), Frequency::None)
    }

    pub fn series(&self) -> &[Series] {
        &self.series
    }

    pub fn covariates(&self) -> &[CovariateDef] {
        &self.covariates
    }

    pub fn frequency(&self) -> Frequency {
        self.frequency
    }

    pub fn with_frequency(mut self, frequency: Frequency) -> Self {
        self.frequency = frequency;
        self
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.id == id)
    }

    /// Hold out the final `horizon` observations of every series.
    ///
    /// Returns the training collection (held-out covariates become future
    /// covariates) and the held-out actual values per series.
    pub fn split_holdout(&self, horizon: usize) -> Result<(SeriesCollection, Vec<(String, Vec<f64>)>)> {
        let mut train = Vec::with_capacity(self.series.len());
        let mut actuals = Vec::with_capacity(self.series.len());
        for s in &self.series {
            if s.len() <= horizon {
                return Err(SetarError::SeriesTooShort(s.id.clone()));
            }
            let cut = s.len() - horizon;
            let mut covariates = Vec::with_capacity(s.covariates.len());
            let mut future = Vec::with_capacity(s.covariates.len());
            for (k, cov) in s.covariates.iter().enumerate() {
                covariates.push(cov[..cut].to_vec());
                let mut f = cov[cut..].to_vec();
                if let Some(extra) = s.future_covariates.get(k) {
                    f.extend(extra.iter().cloned());
                }
                future.push(f);
            }
            train.push(Series {
                id: s.id.clone(),
                values: s.values[..cut].to_vec(),
                covariates,
                future_covariates: future,
            });
            actuals.push((s.id.clone(), s.values[cut..].to_vec()));
        }
        let train = SeriesCollection { series: train, covariates: self.covariates.clone(), frequency: self.frequency };
        Ok((train, actuals))
    }
}

/// Encoding recipe for one covariate; category sets are frozen at training.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CovariateSpec {
    pub name: String,
    pub kind: CovariateKind,
    pub categories: Vec<String>,
}

impl CovariateSpec {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self { name: name.into(), kind: CovariateKind::Numeric, categories: Vec::new() }
    }

    pub fn categorical<S: Into<String>>(name: impl Into<String>, categories: impl IntoIterator<Item = S>) -> Result<Self> {
        let name = name.into();
        let categories: Vec<String> = categories.into_iter().map(Into::into).collect();
        let distinct: HashSet<&String> = categories.iter().collect();
        if distinct.len() != categories.len() {
            return Err(SetarError::InvalidConfig(format!("covariate `{name}` has repeated categories")));
        }
        Ok(Self { name, kind: CovariateKind::Categorical, categories })
    }

    /// Build one spec per covariate of `collection`; categories are the
    /// sorted distinct labels observed in the training values.
    pub fn fit_all(collection: &SeriesCollection) -> Vec<CovariateSpec> {
        collection
            .covariates()
            .iter()
            .enumerate()
            .map(|(k, def)| match def.kind {
                CovariateKind::Numeric => CovariateSpec::numeric(def.name.clone()),
                CovariateKind::Categorical => {
                    let mut labels: Vec<String> = collection
                        .series()
                        .iter()
                        .flat_map(|s| s.covariates[k].iter())
                        .filter_map(|v| match v {
                            CovariateValue::Category(c) => Some(c.clone()),
                            CovariateValue::Numeric(_) => None,
                        })
                        .collect();
                    labels.sort();
                    labels.dedup();
                    CovariateSpec { name: def.name.clone(), kind: CovariateKind::Categorical, categories: labels }
                }
            })
            .collect()
    }

    pub fn width(&self) -> usize {
        match self.kind {
            CovariateKind::Numeric => 1,
            CovariateKind::Categorical => self.categories.len(),
        }
    }

    pub fn column_names(&self) -> Vec<String> {
        match self.kind {
            CovariateKind::Numeric => vec![self.name.clone()],
            CovariateKind::Categorical => self.categories.iter().map(|c| format!("{}={c}", self.name)).collect(),
        }
    }

    fn encode_into(&self, value: &CovariateValue, out: &mut Vec<f64>) -> Result<()> {
        match (self.kind, value) {
            (CovariateKind::Numeric, CovariateValue::Numeric(x)) => out.push(*x),
            (CovariateKind::Categorical, CovariateValue::Category(c)) => {
                let idx = self.categories.iter().position(|k| k == c).ok_or_else(|| SetarError::UnknownCategory {
                    name: self.name.clone(),
                    value: c.clone(),
                })?;
                out.extend((0..self.categories.len()).map(|i| if i == idx { 1.0 } else { 0.0 }));
            }
            (CovariateKind::Numeric, CovariateValue::Category(c)) => {
                return Err(SetarError::InvalidConfig(format!(
                    "covariate `{}` is numeric but got label `{c}`",
                    self.name
                )))
            }
            (CovariateKind::Categorical, CovariateValue::Numeric(x)) => {
                return Err(SetarError::InvalidConfig(format!(
                    "covariate `{}` is categorical but got number {x}",
                    self.name
                )))
            }
        }
        Ok(())
    }
}

/// Numeric values pass through; categorical values become one-hot vectors.
pub fn encode_covariates(raw: &CovariateValue, spec: &CovariateSpec) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(spec.width());
    spec.encode_into(raw, &mut out)?;
    Ok(out)
}

fn check_specs(collection: &SeriesCollection, specs: &[CovariateSpec]) -> Result<()> {
    if specs.is_empty() {
        return Ok(());
    }
    let defs = collection.covariates();
    let matches = defs.len() == specs.len()
        && defs.iter().zip(specs).all(|(d, s)| d.name == s.name && d.kind == s.kind);
    if matches {
        Ok(())
    } else {
        Err(SetarError::InvalidConfig("covariate specs do not match the collection's covariates".into()))
    }
}

fn column_names(n_lags: usize, specs: &[CovariateSpec]) -> Vec<String> {
    (1..=n_lags)
        .map(|l| format!("L{l}"))
        .chain(specs.iter().flat_map(CovariateSpec::column_names))
        .collect()
}

fn encode_step(specs: &[CovariateSpec], values: impl Fn(usize) -> CovariateValue, out: &mut Vec<f64>) -> Result<()> {
    for (k, spec) in specs.iter().enumerate() {
        spec.encode_into(&values(k), out)?;
    }
    Ok(())
}

/// Borrowed view of one row of an [`EmbeddedMatrix`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceRow<'a> {
    pub predictors: &'a [f64],
    pub target: f64,
    pub series_id: &'a str,
    pub target_time: usize,
}

/// Pooled lag-embedding matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedMatrix {
    column_names: Vec<String>,
    n_lags: usize,
    covariates: Vec<CovariateSpec>,
    predictors: Vec<f64>,
    targets: Vec<f64>,
    series_ids: Vec<String>,
    row_series: Vec<usize>,
    target_time: Vec<usize>,
}

impl EmbeddedMatrix {
    /// Assemble a matrix from raw rows; mostly useful for tests and synthetic
    /// regression problems. Every row is attributed to a single series `"x"`.
    pub fn from_rows(rows: &[(Vec<f64>, f64)]) -> Result<Self> {
        let n_cols = rows.first().map(|r| r.0.len()).unwrap_or(0);
        let mut predictors = Vec::with_capacity(rows.len() * n_cols);
        let mut targets = Vec::with_capacity(rows.len());
        for (x, y) in rows {
            if x.len() != n_cols {
                return Err(SetarError::DimensionMismatch { expected: n_cols, found: x.len() });
            }
            predictors.extend_from_slice(x);
            targets.push(*y);
        }
        Ok(Self {
            column_names: column_names(n_cols, &[]),
            n_lags: n_cols,
            covariates: Vec::new(),
            predictors,
            targets,
            series_ids: vec!["x".into()],
            row_series: vec![0; rows.len()],
            target_time: (0..rows.len()).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn n_lags(&self) -> usize {
        self.n_lags
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn covariates(&self) -> &[CovariateSpec] {
        &self.covariates
    }

    pub fn predictors(&self, i: usize) -> &[f64] {
        let p = self.n_cols();
        &self.predictors[i * p..(i + 1) * p]
    }

    pub fn target(&self, i: usize) -> f64 {
        self.targets[i]
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    #[inline]
    pub fn value(&self, i: usize, column: usize) -> f64 {
        self.predictors[i * self.n_cols() + column]
    }

    pub fn row(&self, i: usize) -> InstanceRow<'_> {
        InstanceRow {
            predictors: self.predictors(i),
            target: self.targets[i],
            series_id: &self.series_ids[self.row_series[i]],
            target_time: self.target_time[i],
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = InstanceRow<'_>> + '_ {
        (0..self.len()).map(move |i| self.row(i))
    }

    /// Copy of the matrix restricted to `columns` (in the given order).
    pub fn select_columns(&self, columns: &[usize]) -> Result<Self> {
        let p = self.n_cols();
        if let Some(&bad) = columns.iter().find(|&&c| c >= p) {
            return Err(SetarError::DimensionMismatch { expected: p, found: bad + 1 });
        }
        let mut predictors = Vec::with_capacity(self.len() * columns.len());
        for i in 0..self.len() {
            let row = self.predictors(i);
            predictors.extend(columns.iter().map(|&c| row[c]));
        }
        Ok(Self {
            column_names: columns.iter().map(|&c| self.column_names[c].clone()).collect(),
            n_lags: columns.iter().filter(|&&c| c < self.n_lags).count(),
            covariates: Vec::new(),
            predictors,
            targets: self.targets.clone(),
            series_ids: self.series_ids.clone(),
            row_series: self.row_series.clone(),
            target_time: self.target_time.clone(),
        })
    }
}

/// Pool the lag windows of every series into one matrix.
///
/// Rows are emitted series by series in collection order, time ascending.
/// `covariates = None` (or an empty slice) ignores any covariates present.
pub fn create_input_matrix(collection: &SeriesCollection, lag: usize, covariates: Option<&[CovariateSpec]>) -> Result<EmbeddedMatrix> {
    if lag == 0 {
        return Err(SetarError::InvalidConfig("lag must be at least 1".into()));
    }
    let specs = covariates.unwrap_or(&[]);
    check_specs(collection, specs)?;
    let names = column_names(lag, specs);
    let p = names.len();

    let total: usize = collection.series().iter().map(|s| s.len().saturating_sub(lag)).sum();
    let mut predictors = Vec::with_capacity(total * p);
    let mut targets = Vec::with_capacity(total);
    let mut row_series = Vec::with_capacity(total);
    let mut target_time = Vec::with_capacity(total);
    let mut series_ids = Vec::with_capacity(collection.len());

    for (si, s) in collection.series().iter().enumerate() {
        if s.len() <= lag {
            return Err(SetarError::SeriesTooShort(s.id.clone()));
        }
        series_ids.push(s.id.clone());
        for t in lag..s.len() {
            predictors.extend((1..=lag).map(|l| s.values[t - l]));
            encode_step(specs, |k| s.covariates[k][t].clone(), &mut predictors)?;
            targets.push(s.values[t]);
            row_series.push(si);
            target_time.push(t);
        }
    }

    Ok(EmbeddedMatrix {
        column_names: names,
        n_lags: lag,
        covariates: specs.to_vec(),
        predictors,
        targets,
        series_ids,
        row_series,
        target_time,
    })
}

/// Rolling set of lag windows, one row per series, for recursive forecasting.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSet {
    n_lags: usize,
    n_cols: usize,
    rows: Vec<f64>,
    series_ids: Vec<String>,
    /// Encoded future covariate vectors per series, indexed by forecast step.
    future: Vec<Vec<Vec<f64>>>,
    /// Number of forecasts already consumed.
    step: usize,
}

impl TestSet {
    pub fn len(&self) -> usize {
        self.series_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series_ids.is_empty()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_lags(&self) -> usize {
        self.n_lags
    }

    pub fn series_ids(&self) -> &[String] {
        &self.series_ids
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.rows[s * self.n_cols..(s + 1) * self.n_cols]
    }

    /// Shift every lag window by one, inserting `forecasts` as the new `L1`.
    pub fn advance(&mut self, forecasts: &[f64]) -> Result<()> {
        if forecasts.len() != self.len() {
            return Err(SetarError::LengthMismatch { left: forecasts.len(), right: self.len() });
        }
        let has_cov = self.n_cols > self.n_lags;
        let next = self.step + 1;
        for (s, &f) in forecasts.iter().enumerate() {
            let row = &mut self.rows[s * self.n_cols..(s + 1) * self.n_cols];
            row.copy_within(0..self.n_lags - 1, 1);
            row[0] = f;
            if has_cov {
                let cov = self.future[s].get(next).ok_or(SetarError::MissingFutureCovariates(next + 1))?;
                row[self.n_lags..].copy_from_slice(cov);
            }
        }
        self.step = next;
        Ok(())
    }
}

/// Final `lag` values of each series as the first forecasting instance.
pub fn create_test_set(collection: &SeriesCollection, lag: usize, covariates: Option<&[CovariateSpec]>) -> Result<TestSet> {
    if lag == 0 {
        return Err(SetarError::InvalidConfig("lag must be at least 1".into()));
    }
    let specs = covariates.unwrap_or(&[]);
    check_specs(collection, specs)?;
    let n_cols = lag + specs.iter().map(CovariateSpec::width).sum::<usize>();
    let mut rows = Vec::with_capacity(collection.len() * n_cols);
    let mut future = Vec::with_capacity(collection.len());

    for s in collection.series() {
        if s.len() < lag {
            return Err(SetarError::SeriesTooShort(s.id.clone()));
        }
        rows.extend((1..=lag).map(|l| s.values[s.len() - l]));
        let mut steps = Vec::new();
        if !specs.is_empty() {
            let available = s.future_covariates.iter().map(Vec::len).min().unwrap_or(0);
            for h in 0..available {
                let mut enc = Vec::with_capacity(n_cols - lag);
                encode_step(specs, |k| s.future_covariates[k][h].clone(), &mut enc)?;
                steps.push(enc);
            }
            let first = steps.first().ok_or(SetarError::MissingFutureCovariates(1))?;
            rows.extend_from_slice(first);
        }
        future.push(steps);
    }

    Ok(TestSet {
        n_lags: lag,
        n_cols,
        rows,
        series_ids: collection.series().iter().map(|s| s.id.clone()).collect(),
        future,
        step: 0,
    })
}

/// Pure form of [`TestSet::advance`].
pub fn update_test_set(test: &TestSet, step_forecasts: &[f64]) -> Result<TestSet> {
    let mut next = test.clone();
    next.advance(step_forecasts)?;
    Ok(next)
}
