use crate::data::TestSet;
use crate::error::{Result, SetarError};

/// Per-series forecasts, one row per series and one column per step ahead.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastMatrix {
    series_ids: Vec<String>,
    horizon: usize,
    values: Vec<f64>,
}

impl ForecastMatrix {
    pub fn new(series_ids: Vec<String>, horizon: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != series_ids.len() * horizon {
            return Err(SetarError::LengthMismatch { left: values.len(), right: series_ids.len() * horizon });
        }
        Ok(Self { series_ids, horizon, values })
    }

    pub fn series_ids(&self) -> &[String] {
        &self.series_ids
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.series_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series_ids.is_empty()
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.horizon..(s + 1) * self.horizon]
    }

    pub fn get(&self, s: usize, h: usize) -> f64 {
        self.values[s * self.horizon + h]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row_by_id(&self, id: &str) -> Option<&[f64]> {
        self.series_ids.iter().position(|s| s == id).map(|s| self.row(s))
    }

    /// Column `h` (0-based step) across all series.
    pub fn step(&self, h: usize) -> Vec<f64> {
        (0..self.len()).map(|s| self.get(s, h)).collect()
    }

    /// Elementwise arithmetic mean of matrices with identical layout.
    pub fn mean(members: &[ForecastMatrix]) -> Result<ForecastMatrix> {
        let first = members.first().ok_or(SetarError::EmptyTrainingSet)?;
        let mut sum = vec![0.0; first.values.len()];
        for m in members {
            if m.series_ids != first.series_ids || m.horizon != first.horizon {
                return Err(SetarError::LengthMismatch { left: m.values.len(), right: first.values.len() });
            }
            sum.iter_mut().zip(&m.values).for_each(|(a, v)| *a += v);
        }
        let k = members.len() as f64;
        sum.iter_mut().for_each(|v| *v /= k);
        ForecastMatrix::new(first.series_ids.clone(), first.horizon, sum)
    }
}

/// Recursive multi-step forecasting: predict every row of the test set, record
/// the step, feed the predictions back as the newest lag, repeat.
pub fn recursive_forecast<F>(mut test: TestSet, horizon: usize, mut predict: F) -> Result<ForecastMatrix>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if horizon == 0 {
        return Err(SetarError::InvalidConfig("horizon must be at least 1".into()));
    }
    let n = test.len();
    let mut values = vec![0.0; n * horizon];
    let mut step = vec![0.0; n];
    for h in 0..horizon {
        for (s, slot) in step.iter_mut().enumerate() {
            *slot = predict(test.row(s))?;
            values[s * horizon + h] = *slot;
        }
        if h + 1 < horizon {
            test.advance(&step)?;
        }
    }
    ForecastMatrix::new(test.series_ids().to_vec(), horizon, values)
}
