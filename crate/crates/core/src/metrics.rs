//! Forecast accuracy: msMAPE, MASE, dataset-level aggregates and the
//! lag-count heuristic.

use serde::Serialize;

use crate::error::{Result, SetarError};
use crate::forecast::ForecastMatrix;

pub const DEFAULT_EPSILON: f64 = 0.1;

/// Modified symmetric MAPE in percent; the denominator is floored at
/// `(0.5 + epsilon) / 2`.
pub fn msmape(forecasts: &[f64], actuals: &[f64], epsilon: f64) -> Result<f64> {
    if forecasts.len() != actuals.len() {
        return Err(SetarError::LengthMismatch { left: forecasts.len(), right: actuals.len() });
    }
    if forecasts.is_empty() {
        return Err(SetarError::LengthMismatch { left: 0, right: 1 });
    }
    let total: f64 = forecasts
        .iter()
        .zip(actuals)
        .map(|(f, y)| {
            let denom = (y.abs() + f.abs() + epsilon).max(0.5 + epsilon) / 2.0;
            (f - y).abs() / denom
        })
        .sum();
    Ok(100.0 * total / forecasts.len() as f64)
}

/// Mean absolute error scaled by the in-sample seasonal-naive error.
pub fn mase(forecasts: &[f64], actuals: &[f64], training: &[f64], seasonality: usize) -> Result<f64> {
    if forecasts.len() != actuals.len() {
        return Err(SetarError::LengthMismatch { left: forecasts.len(), right: actuals.len() });
    }
    if forecasts.is_empty() {
        return Err(SetarError::LengthMismatch { left: 0, right: 1 });
    }
    if seasonality == 0 || training.len() <= seasonality {
        return Err(SetarError::InvalidConfig(format!(
            "MASE needs a training series longer than the seasonality ({} <= {seasonality})",
            training.len()
        )));
    }
    let naive: f64 = training.windows(seasonality + 1).map(|w| (w[seasonality] - w[0]).abs()).sum();
    if naive == 0.0 {
        return Err(SetarError::ZeroDenominator);
    }
    let n = forecasts.len() as f64;
    let m = training.len() as f64;
    let error: f64 = forecasts.iter().zip(actuals).map(|(f, y)| (f - y).abs()).sum();
    Ok(error / (n / (m - seasonality as f64) * naive))
}

/// Number of lags suggested by the seasonality or, when that is small, the horizon.
///
/// The raw value is `1.25 x` of the seasonal period or horizon; fractional
/// values are rounded up to the next multiple of 5. A seasonal suggestion
/// below 10 counts as small.
pub fn heuristic_lags(seasonality: Option<usize>, horizon: usize) -> usize {
    fn round(raw: f64) -> usize {
        if raw.fract() == 0.0 {
            raw as usize
        } else {
            ((raw / 5.0).ceil() * 5.0) as usize
        }
    }
    if let Some(s) = seasonality.filter(|&s| s > 0) {
        let lags = round(s as f64 * 1.25);
        if lags >= 10 {
            return lags;
        }
    }
    round(horizon as f64 * 1.25).max(1)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesScore {
    pub id: String,
    pub msmape: f64,
    /// `None` when the in-sample naive error is zero.
    pub mase: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregates {
    pub mean_msmape: f64,
    pub median_msmape: f64,
    pub mean_mase: f64,
    pub median_mase: f64,
}

impl Aggregates {
    pub fn from_scores(scores: &[SeriesScore]) -> Self {
        let mut ms: Vec<f64> = scores.iter().map(|s| s.msmape).collect();
        let mut ma: Vec<f64> = scores.iter().filter_map(|s| s.mase).collect();
        let mean = |v: &[f64]| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
        Aggregates {
            mean_msmape: mean(&ms),
            median_msmape: median(&mut ms),
            mean_mase: mean(&ma),
            median_mase: median(&mut ma),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationConfig {
    pub horizon: usize,
    pub seasonality: usize,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub config: EvaluationConfig,
    pub per_series: Vec<SeriesScore>,
    pub aggregates: Aggregates,
    /// Series left out of the MASE aggregates because MASE was undefined.
    pub mase_undefined: Vec<String>,
}

/// Score every forecast row against its actuals and training history.
///
/// `actuals` and `training` are looked up by series id; forecasts are cut to
/// the length of the actuals when the actuals are shorter.
pub fn evaluate(
    forecasts: &ForecastMatrix,
    actuals: &[(String, Vec<f64>)],
    training: &[(String, Vec<f64>)],
    seasonality: usize,
    epsilon: f64,
) -> Result<EvaluationReport> {
    let lookup = |set: &'_ [(String, Vec<f64>)], id: &str| set.iter().find(|(k, _)| k == id).map(|(_, v)| v.clone());
    let mut per_series = Vec::with_capacity(forecasts.len());
    let mut undefined = Vec::new();
    for (s, id) in forecasts.series_ids().iter().enumerate() {
        let actual = lookup(actuals, id).ok_or_else(|| SetarError::MissingActuals(id.clone()))?;
        let train = lookup(training, id).ok_or_else(|| SetarError::MissingActuals(id.clone()))?;
        let n = actual.len().min(forecasts.horizon());
        if n == 0 {
            return Err(SetarError::MissingActuals(id.clone()));
        }
        let f = &forecasts.row(s)[..n];
        let y = &actual[..n];
        let score = msmape(f, y, epsilon)?;
        let scaled = match mase(f, y, &train, seasonality) {
            Ok(v) => Some(v),
            Err(SetarError::ZeroDenominator) => {
                undefined.push(id.clone());
                None
            }
            Err(e) => return Err(e),
        };
        per_series.push(SeriesScore { id: id.clone(), msmape: score, mase: scaled });
    }
    Ok(EvaluationReport {
        config: EvaluationConfig { horizon: forecasts.horizon(), seasonality, epsilon },
        aggregates: Aggregates::from_scores(&per_series),
        per_series,
        mase_undefined: undefined,
    })
}
