use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde_json::json;
use setar_core::data::CovariateSpec;
use setar_core::dgp::{generate, DgpConfig, DgpKind};
use setar_core::io::{self, InputConfig};
use setar_core::model_io;
use setar_core::{
    create_input_matrix, evaluate, forecast, forecast_forest, heuristic_lags, train_forest, train_pr_baseline,
    train_tree, ForecastMatrix, SeriesCollection, SetarError, SetarForest, SetarTree, TreeConfig,
};

use crate::args::*;
use crate::report::{Metrics, ModelSummary, RunReport, TreeSummary};

fn usage(message: impl Into<String>) -> anyhow::Error {
    SetarError::InvalidConfig(message.into()).into()
}

/// Write through a temporary file in the target directory, then rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(SetarError::Io)
        .with_context(|| format!("creating a temporary file next to {}", path.display()))?;
    tmp.write_all(contents).map_err(SetarError::Io)?;
    tmp.as_file().sync_all().map_err(SetarError::Io)?;
    tmp.persist(path).map_err(|e| SetarError::Io(e.error)).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_report(path: Option<&Path>, report: &RunReport) -> Result<()> {
    if let Some(path) = path {
        let mut text = serde_json::to_string_pretty(report)?;
        text.push('\n');
        write_atomic(path, text.as_bytes())?;
    }
    Ok(())
}

fn load_input(args: &InputArgs) -> Result<(SeriesCollection, InputConfig)> {
    let config = match &args.input_config {
        Some(p) => io::read_input_config(p).with_context(|| format!("reading {}", p.display()))?,
        None => InputConfig::default(),
    };
    let collection = io::read_series(&args.input, &config).with_context(|| format!("reading {}", args.input.display()))?;
    Ok((collection, config))
}

fn resolve_lag(lag: Option<usize>, horizon: Option<usize>, seasonality: Option<usize>) -> Result<usize> {
    match (lag, horizon) {
        (Some(0), _) => Err(usage("--lag must be at least 1")),
        (Some(l), _) => Ok(l),
        (None, Some(h)) if h > 0 => Ok(heuristic_lags(seasonality, h)),
        _ => Err(usage("give --lag, or --horizon so the lag can be chosen")),
    }
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

enum Model {
    Tree(SetarTree),
    Forest(SetarForest),
}

impl Model {
    fn forecast(&self, collection: &SeriesCollection, horizon: usize) -> setar_core::Result<ForecastMatrix> {
        match self {
            Model::Tree(t) => forecast(t, collection, horizon),
            Model::Forest(f) => forecast_forest(f, collection, horizon),
        }
    }

    fn serialize(&self) -> String {
        match self {
            Model::Tree(t) => model_io::tree_to_string(t),
            Model::Forest(f) => model_io::forest_to_string(f),
        }
    }
}

fn fit_tree(collection: &SeriesCollection, lag: usize, config: &TreeConfig, baseline: bool) -> Result<(SetarTree, ModelSummary)> {
    let specs = CovariateSpec::fit_all(collection);
    let matrix = create_input_matrix(collection, lag, Some(&specs))?;
    config.validate()?;
    if baseline {
        let tree = SetarTree::from_baseline(train_pr_baseline(&matrix)?, &matrix, *config);
        let summary = ModelSummary::Pr(TreeSummary::of(&tree));
        Ok((tree, summary))
    } else {
        let tree = train_tree(&matrix, config)?;
        let summary = ModelSummary::Tree(TreeSummary::of(&tree));
        Ok((tree, summary))
    }
}

fn fit_forest(collection: &SeriesCollection, lag: usize, forest: &ForestArgs) -> Result<(SetarForest, ModelSummary)> {
    let specs = CovariateSpec::fit_all(collection);
    let matrix = create_input_matrix(collection, lag, Some(&specs))?;
    let forest = train_forest(&matrix, &forest.forest_config())?;
    let summary = ModelSummary::forest(&forest);
    Ok((forest, summary))
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let mut config = match args.kind {
        DgpName::ChaoticLogistic => DgpConfig::chaotic_logistic(args.n, args.length, args.seed),
        DgpName::MackeyGlass => DgpConfig::mackey_glass(args.n, args.length, args.seed),
        DgpName::Setar2 => DgpConfig::setar2(args.n, args.length, args.seed),
    };
    if let Some(sd) = args.noise_sd {
        match &mut config.kind {
            DgpKind::ChaoticLogistic(p) => p.noise_sd = sd,
            DgpKind::Setar2(p) => p.noise_sd = sd,
            DgpKind::MackeyGlass(_) => return Err(usage("--noise-sd does not apply to mackey-glass")),
        }
    }
    let collection = generate(&config)?;
    match (args.holdout, &args.actuals_out) {
        (Some(h), Some(actuals_path)) => {
            let (train, actuals) = collection.split_holdout(h)?;
            write_atomic(&args.out, io::format_collection(&train).as_bytes())?;
            let text = io::format_values_file(actuals.iter().map(|(id, v)| (id.as_str(), v.as_slice())));
            write_atomic(actuals_path, text.as_bytes())?;
        }
        _ => write_atomic(&args.out, io::format_collection(&collection).as_bytes())?,
    }
    Ok(())
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let (collection, cfg) = load_input(&args.input)?;
    let seasonality = args.lag.seasonality.or(cfg.frequency.seasonality());
    let lag = resolve_lag(args.lag.lag, args.lag.horizon, seasonality)?;
    let config = args.stopping.tree_config();
    let mut report = RunReport::new(
        "train",
        json!({
            "input": args.input.input,
            "input_config": args.input.input_config,
            "lag": lag,
            "horizon": args.lag.horizon,
            "seasonality": seasonality,
            "tree": config,
            "baseline": args.baseline.map(|_| "pr"),
        }),
    );
    let start = Instant::now();
    let (tree, summary) = fit_tree(&collection, lag, &config, args.baseline.is_some())?;
    report.timings_ms.train = Some(ms(start));
    report.model = Some(summary);
    write_atomic(&args.model_out, model_io::tree_to_string(&tree).as_bytes())?;
    write_report(args.report.as_deref(), &report)
}

pub fn train_forest_cmd(args: &TrainForestArgs) -> Result<()> {
    let (collection, cfg) = load_input(&args.input)?;
    let seasonality = args.lag.seasonality.or(cfg.frequency.seasonality());
    let lag = resolve_lag(args.lag.lag, args.lag.horizon, seasonality)?;
    let mut report = RunReport::new(
        "train-forest",
        json!({
            "input": args.input.input,
            "input_config": args.input.input_config,
            "lag": lag,
            "horizon": args.lag.horizon,
            "seasonality": seasonality,
            "forest": args.forest.forest_config(),
        }),
    );
    let start = Instant::now();
    let (forest, summary) = fit_forest(&collection, lag, &args.forest)?;
    report.timings_ms.train = Some(ms(start));
    report.model = Some(summary);
    write_atomic(&args.model_out, model_io::forest_to_string(&forest).as_bytes())?;
    write_report(args.report.as_deref(), &report)
}

fn load_model(path: &Path) -> Result<Model> {
    let text = std::fs::read_to_string(path)
        .map_err(SetarError::Io)
        .with_context(|| format!("reading {}", path.display()))?;
    let model = if text.trim_start().starts_with("(setar-forest") {
        Model::Forest(model_io::forest_from_str(&text)?)
    } else {
        Model::Tree(model_io::tree_from_str(&text)?)
    };
    Ok(model)
}

pub fn forecast_cmd(args: &ForecastArgs) -> Result<()> {
    if args.horizon == 0 {
        return Err(usage("--horizon must be at least 1"));
    }
    let model = load_model(&args.model)?;
    let (collection, _) = load_input(&args.input)?;
    let forecasts = model.forecast(&collection, args.horizon)?;
    write_atomic(&args.out, io::format_forecasts(&forecasts).as_bytes())
}

fn as_pairs(collection: &SeriesCollection) -> Vec<(String, Vec<f64>)> {
    collection.series().iter().map(|s| (s.id.clone(), s.values.clone())).collect()
}

pub fn evaluate_cmd(args: &EvaluateArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.forecasts)
        .map_err(SetarError::Io)
        .with_context(|| format!("reading {}", args.forecasts.display()))?;
    let forecasts = io::parse_forecasts(&text)?;
    let actuals = io::read_series(&args.actuals, &InputConfig::default())
        .with_context(|| format!("reading {}", args.actuals.display()))?;
    let training = io::read_series(&args.training, &InputConfig::default())
        .with_context(|| format!("reading {}", args.training.display()))?;
    let report = evaluate(&forecasts, &as_pairs(&actuals), &as_pairs(&training), args.seasonality, args.epsilon)?;
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    write_atomic(&args.out, text.as_bytes())
}

pub fn run(args: &RunArgs) -> Result<()> {
    if args.horizon == 0 {
        return Err(usage("--horizon must be at least 1"));
    }
    let (collection, cfg) = load_input(&args.input)?;
    let seasonality = args.seasonality.or(cfg.frequency.seasonality());
    let lag = resolve_lag(args.lag, Some(args.horizon), seasonality)?;
    let mase_period = seasonality.unwrap_or(1);
    let tree_config = args.stopping.tree_config();
    let forest_args = args.forest_args();
    let model_config = if args.forest {
        json!({ "forest": forest_args.forest_config() })
    } else {
        json!({ "tree": tree_config, "baseline": args.baseline.map(|_| "pr") })
    };
    let mut report = RunReport::new(
        "run",
        json!({
            "input": args.input.input,
            "input_config": args.input.input_config,
            "lag": lag,
            "horizon": args.horizon,
            "seasonality": mase_period,
            "epsilon": args.epsilon,
            "model": model_config,
        }),
    );

    let (train, actuals) = collection.split_holdout(args.horizon)?;

    let start = Instant::now();
    let model = if args.forest {
        let (forest, summary) = fit_forest(&train, lag, &forest_args)?;
        report.model = Some(summary);
        Model::Forest(forest)
    } else {
        let (tree, summary) = fit_tree(&train, lag, &tree_config, args.baseline.is_some())?;
        report.model = Some(summary);
        Model::Tree(tree)
    };
    report.timings_ms.train = Some(ms(start));

    let start = Instant::now();
    let forecasts = model.forecast(&train, args.horizon)?;
    report.timings_ms.forecast = Some(ms(start));

    let start = Instant::now();
    let eval = evaluate(&forecasts, &actuals, &as_pairs(&train), mase_period, args.epsilon)?;
    report.timings_ms.evaluate = Some(ms(start));
    report.metrics = Some(Metrics { aggregates: eval.aggregates, per_series: eval.per_series, mase_undefined: eval.mase_undefined });

    write_atomic(&args.out, io::format_forecasts(&forecasts).as_bytes())?;
    if let Some(path) = &args.model_out {
        write_atomic(path, model.serialize().as_bytes())?;
    }
    write_report(args.report.as_deref(), &report)
}
