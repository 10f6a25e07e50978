//! Text formats.
//!
//! * Values file: one series per line, `series_id:v1,v2,...,vm`.
//! * Long CSV: header `series_id,timestep,value[,cov1,...]`, timesteps
//!   0-based and contiguous per series. Rows with an empty `value` after the
//!   last observation carry future covariate values only.
//! * Input config: `key=value` lines; `cov.<name>.kind=numeric|categorical`
//!   declares covariate kinds (undeclared covariates are numeric) and
//!   `frequency=daily|monthly|quarterly|none` sets the frequency hint.
//! * Forecast CSV: header `series_id,h1,...,hH`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::data::{CovariateDef, CovariateKind, CovariateValue, Frequency, Series, SeriesCollection};
use crate::error::{Result, SetarError};
use crate::forecast::ForecastMatrix;

fn parse_err(line: usize, message: impl Into<String>) -> SetarError {
    SetarError::Parse { line, message: message.into() }
}

fn parse_number(text: &str, line: usize) -> Result<f64> {
    let t = text.trim();
    let v: f64 = t.parse().map_err(|_| parse_err(line, format!("`{t}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("`{t}` is not a finite number")));
    }
    Ok(v)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InputConfig {
    pub covariate_kinds: HashMap<String, CovariateKind>,
    pub frequency: Frequency,
}

pub fn parse_input_config(text: &str) -> Result<InputConfig> {
    let mut cfg = InputConfig::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| parse_err(n + 1, "expected key=value"))?;
        let (key, value) = (key.trim(), value.trim());
        if let Some(name) = key.strip_prefix("cov.").and_then(|k| k.strip_suffix(".kind")) {
            cfg.covariate_kinds.insert(name.to_string(), value.parse()?);
        } else if key == "frequency" {
            cfg.frequency = match value {
                "daily" => Frequency::Daily,
                "monthly" => Frequency::Monthly,
                "quarterly" => Frequency::Quarterly,
                "none" => Frequency::None,
                other => return Err(parse_err(n + 1, format!("unknown frequency `{other}`"))),
            };
        } else {
            return Err(parse_err(n + 1, format!("unknown key `{key}`")));
        }
    }
    Ok(cfg)
}

pub fn parse_values_file(text: &str) -> Result<SeriesCollection> {
    let mut items = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let (id, values) = line.split_once(':').ok_or_else(|| parse_err(n + 1, "expected `series_id:v1,v2,...`"))?;
        let values = if values.trim().is_empty() {
            Vec::new()
        } else {
            values.split(',').map(|v| parse_number(v, n + 1)).collect::<Result<Vec<_>>>()?
        };
        items.push((id.trim().to_string(), values));
    }
    SeriesCollection::from_values(items)
}

pub fn format_values_file<'a>(series: impl IntoIterator<Item = (&'a str, &'a [f64])>) -> String {
    let mut out = String::new();
    for (id, values) in series {
        out.push_str(id);
        out.push(':');
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(out, "{v}").expect("writing to a String cannot fail");
        }
        out.push('\n');
    }
    out
}

pub fn format_collection(collection: &SeriesCollection) -> String {
    format_values_file(collection.series().iter().map(|s| (s.id.as_str(), s.values.as_slice())))
}

struct LongRow {
    timestep: usize,
    value: Option<f64>,
    covariates: Vec<String>,
    line: usize,
}

pub fn parse_long_csv(text: &str, config: &InputConfig) -> Result<SeriesCollection> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.len() < 3 || header[0] != "series_id" || header[1] != "timestep" || header[2] != "value" {
        return Err(parse_err(1, "header must start with series_id,timestep,value"));
    }
    let defs: Vec<CovariateDef> = header[3..]
        .iter()
        .map(|name| CovariateDef {
            name: name.clone(),
            kind: config.covariate_kinds.get(name).copied().unwrap_or(CovariateKind::Numeric),
        })
        .collect();

    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<LongRow>> = HashMap::new();
    for (n, record) in reader.records().enumerate() {
        let record = record?;
        let line = n + 2;
        if record.len() != header.len() {
            return Err(parse_err(line, format!("expected {} fields, found {}", header.len(), record.len())));
        }
        let id = record[0].to_string();
        let timestep: usize = record[1].parse().map_err(|_| parse_err(line, format!("bad timestep `{}`", &record[1])))?;
        let value = if record[2].is_empty() { None } else { Some(parse_number(&record[2], line)?) };
        let row = LongRow { timestep, value, covariates: record.iter().skip(3).map(str::to_string).collect(), line };
        if !groups.contains_key(&id) {
            order.push(id.clone());
        }
        groups.entry(id).or_default().push(row);
    }

    let mut series = Vec::with_capacity(order.len());
    for id in order {
        let mut rows = groups.remove(&id).expect("grouped above");
        rows.sort_by_key(|r| r.timestep);
        let mut values = Vec::new();
        let mut covariates: Vec<Vec<CovariateValue>> = vec![Vec::new(); defs.len()];
        let mut future: Vec<Vec<CovariateValue>> = vec![Vec::new(); defs.len()];
        for (expected, row) in rows.iter().enumerate() {
            if row.timestep != expected {
                return Err(parse_err(row.line, format!("series `{id}` timesteps are not contiguous from 0")));
            }
            let in_future = row.value.is_none();
            if !in_future && future.first().is_some_and(|f| !f.is_empty()) {
                return Err(parse_err(row.line, format!("series `{id}` has an observation after a future-only row")));
            }
            if in_future && defs.is_empty() {
                return Err(parse_err(row.line, format!("series `{id}` has a missing value")));
            }
            for (k, def) in defs.iter().enumerate() {
                let raw = &row.covariates[k];
                let v = match def.kind {
                    CovariateKind::Numeric => CovariateValue::Numeric(parse_number(raw, row.line)?),
                    CovariateKind::Categorical => CovariateValue::Category(raw.clone()),
                };
                if in_future { future[k].push(v) } else { covariates[k].push(v) }
            }
            if let Some(v) = row.value {
                values.push(v);
            }
        }
        let future = if future.iter().all(Vec::is_empty) { Vec::new() } else { future };
        series.push(Series { id, values, covariates, future_covariates: future });
    }
    SeriesCollection::new(series, defs, config.frequency)
}

/// Read either text format; a first line starting with `series_id,` selects the long CSV.
pub fn parse_series(text: &str, config: &InputConfig) -> Result<SeriesCollection> {
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if first.trim_start().starts_with("series_id,") {
        parse_long_csv(text, config)
    } else {
        Ok(parse_values_file(text)?.with_frequency(config.frequency))
    }
}

pub fn read_series(path: &Path, config: &InputConfig) -> Result<SeriesCollection> {
    parse_series(&std::fs::read_to_string(path)?, config)
}

pub fn read_input_config(path: &Path) -> Result<InputConfig> {
    parse_input_config(&std::fs::read_to_string(path)?)
}

pub fn format_forecasts(forecasts: &ForecastMatrix) -> String {
    let mut out = String::from("series_id");
    for h in 1..=forecasts.horizon() {
        write!(out, ",h{h}").expect("writing to a String cannot fail");
    }
    out.push('\n');
    for (s, id) in forecasts.series_ids().iter().enumerate() {
        out.push_str(id);
        for v in forecasts.row(s) {
            write!(out, ",{v}").expect("writing to a String cannot fail");
        }
        out.push('\n');
    }
    out
}

pub fn parse_forecasts(text: &str) -> Result<ForecastMatrix> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.get(0) != Some("series_id") || header.len() < 2 {
        return Err(parse_err(1, "forecast header must be series_id,h1,...,hH"));
    }
    let horizon = header.len() - 1;
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record?;
        ids.push(record[0].to_string());
        for field in record.iter().skip(1) {
            values.push(parse_number(field, n + 2)?);
        }
    }
    ForecastMatrix::new(ids, horizon, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_file_round_trip() {
        let text = "a:1,2.5,3\nb:0.1,-4e-20,7\n";
        let c = parse_values_file(text).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.series()[1].values, vec![0.1, -4e-20, 7.0]);
        let again = parse_values_file(&format_collection(&c)).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn values_file_errors() {
        assert!(matches!(parse_values_file("a 1,2"), Err(SetarError::Parse { line: 1, .. })));
        assert!(matches!(parse_values_file("a:1\nb:1,x"), Err(SetarError::Parse { line: 2, .. })));
        assert!(matches!(parse_values_file("a:1,NaN"), Err(SetarError::Parse { .. })));
        assert!(matches!(parse_values_file("a:1\na:2"), Err(SetarError::DuplicateSeriesId(_))));
    }

    #[test]
    fn long_csv_with_covariates() {
        let cfg = parse_input_config("# kinds\ncov.day.kind=categorical\nfrequency=daily\n").unwrap();
        let text = "series_id,timestep,value,day,price\n\
                    a,1,2.0,Tue,1.5\n\
                    a,0,1.0,Mon,1.0\n\
                    b,0,5.0,Mon,2.0\n\
                    a,2,,Wed,1.7\n\
                    b,1,6.0,Tue,2.5\n";
        let c = parse_series(text, &cfg).unwrap();
        assert_eq!(c.frequency(), Frequency::Daily);
        assert_eq!(c.covariates()[0].kind, CovariateKind::Categorical);
        assert_eq!(c.covariates()[1].kind, CovariateKind::Numeric);
        let a = c.get("a").unwrap();
        assert_eq!(a.values, vec![1.0, 2.0]);
        assert_eq!(a.covariates[0][0], CovariateValue::Category("Mon".into()));
        assert_eq!(a.future_covariates[1], vec![CovariateValue::Numeric(1.7)]);
        assert!(c.get("b").unwrap().future_covariates.is_empty());
    }

    #[test]
    fn long_csv_errors() {
        let cfg = InputConfig::default();
        assert!(parse_long_csv("id,t,v\n", &cfg).is_err());
        let gap = "series_id,timestep,value\na,0,1\na,2,3\n";
        assert!(matches!(parse_long_csv(gap, &cfg), Err(SetarError::Parse { .. })));
        let missing = "series_id,timestep,value\na,0,1\na,1,\n";
        assert!(matches!(parse_long_csv(missing, &cfg), Err(SetarError::Parse { .. })));
        assert!(parse_input_config("cov.x.kind=ordinal").is_err());
        assert!(parse_input_config("colour=blue").is_err());
    }

    #[test]
    fn forecast_csv_round_trip() {
        let f = ForecastMatrix::new(vec!["a".into(), "b".into()], 2, vec![1.0, 0.30000000000000004, -2.5, 1e-300]).unwrap();
        let text = format_forecasts(&f);
        assert!(text.starts_with("series_id,h1,h2\na,1,0.30000000000000004\n"));
        assert_eq!(parse_forecasts(&text).unwrap(), f);
    }
}
