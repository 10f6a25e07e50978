use serde::Serialize;
use setar_core::metrics::{Aggregates, SeriesScore};
use setar_core::{SetarForest, SetarTree};

#[derive(Debug, Default, Serialize)]
pub struct Timings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forecast: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluate: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct SplitSummary {
    pub column: String,
    pub threshold: f64,
}

#[derive(Debug, Serialize)]
pub struct TreeSummary {
    pub depth: usize,
    pub leaf_count: usize,
    pub rows_per_leaf: Vec<usize>,
    pub splits: Vec<SplitSummary>,
}

impl TreeSummary {
    pub fn of(tree: &SetarTree) -> Self {
        let s = tree.summary();
        Self {
            depth: s.depth,
            leaf_count: s.leaf_count,
            rows_per_leaf: s.rows_per_leaf.clone(),
            splits: tree.splits().into_iter().map(|(column, threshold)| SplitSummary { column, threshold }).collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct MemberSummary {
    pub alpha0: f64,
    pub significance_divider: f64,
    pub error_threshold: f64,
    #[serde(flatten)]
    pub tree: TreeSummary,
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSummary {
    Tree(TreeSummary),
    Pr(TreeSummary),
    Forest { members: Vec<MemberSummary> },
}

impl ModelSummary {
    pub fn forest(forest: &SetarForest) -> Self {
        ModelSummary::Forest {
            members: forest
                .members()
                .iter()
                .map(|m| MemberSummary {
                    alpha0: m.stopping.alpha0,
                    significance_divider: m.stopping.significance_divider,
                    error_threshold: m.stopping.error_threshold,
                    tree: TreeSummary::of(&m.tree),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Metrics {
    pub aggregates: Aggregates,
    pub per_series: Vec<SeriesScore>,
    pub mase_undefined: Vec<String>,
}

/// Everything needed to repeat a command: its parameters, the model it
/// produced, phase timings and any metrics.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: &'static str,
    pub version: &'static str,
    pub config: serde_json::Value,
    pub timings_ms: Timings,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Metrics>,
}

impl RunReport {
    pub fn new(command: &'static str, config: serde_json::Value) -> Self {
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config,
            timings_ms: Timings::default(),
            model: None,
            metrics: None,
        }
    }
}
