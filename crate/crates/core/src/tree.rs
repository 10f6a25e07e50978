//! Level-wise growth of a SETAR tree, leaf regression models, routing and
//! recursive forecasting.

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{create_test_set, CovariateSpec, EmbeddedMatrix, SeriesCollection};
use crate::error::{Result, SetarError};
use crate::forecast::{recursive_forecast, ForecastMatrix};
use crate::linalg::{fit_rows, LinearFit};
use crate::split::{get_opt_params, min_child_size, split_node, SplitDecision, DEFAULT_GRID_SIZE};
use crate::stopping::{is_good_split, StoppingConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TreeConfig {
    pub stopping: StoppingConfig,
    pub grid_size: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self { stopping: StoppingConfig::default(), grid_size: DEFAULT_GRID_SIZE }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        self.stopping.validate()?;
        if self.grid_size == 0 {
            return Err(SetarError::InvalidConfig("grid size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Pooled linear autoregression fitted on the rows routed to a leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafModel {
    pub fit: LinearFit,
    pub n_train_rows: usize,
}

impl LeafModel {
    pub fn n_predictors(&self) -> usize {
        self.fit.beta.len() - 1
    }
}

pub fn predict_leaf(model: &LeafModel, instance: &[f64]) -> Result<f64> {
    if instance.len() != model.n_predictors() {
        return Err(SetarError::DimensionMismatch { expected: model.n_predictors(), found: instance.len() });
    }
    Ok(model.fit.predict(instance))
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Internal { decision: SplitDecision, left: usize, right: usize },
    Leaf(LeafModel),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingSummary {
    /// Number of levels at which at least one node was split.
    pub depth: usize,
    pub leaf_count: usize,
    pub rows_per_leaf: Vec<usize>,
}

/// How a tree maps the full instance vector onto the columns it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct InputLayout {
    pub n_lags: usize,
    pub column_names: Vec<String>,
    pub covariates: Vec<CovariateSpec>,
    /// Columns of the full instance the tree reads, in training order; `None`
    /// means all of them.
    pub projection: Option<Vec<usize>>,
}

impl InputLayout {
    pub fn width(&self) -> usize {
        self.column_names.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SetarTree {
    pub(crate) nodes: Vec<TreeNode>,
    pub(crate) config: TreeConfig,
    pub(crate) layout: InputLayout,
    pub(crate) summary: TrainingSummary,
}

enum Slot {
    Open(Vec<usize>),
    Split { decision: SplitDecision, left: usize, right: usize },
    Frozen(Vec<usize>),
}

/// Grow a tree on every row of `matrix`.
pub fn train_tree(matrix: &EmbeddedMatrix, config: &TreeConfig) -> Result<SetarTree> {
    train_tree_on_rows(matrix, (0..matrix.len()).collect(), config)
}

/// Grow a tree on a subset of the rows of `matrix`.
///
/// Each level evaluates every open node independently at that level's
/// significance; nodes that fail are frozen, children of accepted splits form
/// the next level. Growth ends when a level accepts no split or `max_depth`
/// levels have been split.
pub fn train_tree_on_rows(matrix: &EmbeddedMatrix, rows: Vec<usize>, config: &TreeConfig) -> Result<SetarTree> {
    config.validate()?;
    if rows.is_empty() {
        return Err(SetarError::EmptyTrainingSet);
    }
    let p = matrix.n_cols();
    let needed = p + 3;
    if rows.len() < needed {
        return Err(SetarError::TooFewRows { rows: rows.len(), needed });
    }
    let columns: Vec<usize> = (0..p).collect();
    let min_child = min_child_size(p);

    let mut slots = vec![Slot::Open(rows)];
    let mut frontier = vec![0usize];
    let mut depth_reached = 0;

    for depth in 0..config.stopping.max_depth {
        let outcomes: Vec<Result<Option<SplitDecision>>> = frontier
            .par_iter()
            .map(|&id| {
                let Slot::Open(node_rows) = &slots[id] else { unreachable!("frontier holds open nodes") };
                if node_rows.len() < 2 * min_child {
                    return Ok(None);
                }
                let decision = match get_opt_params(matrix, node_rows, &columns, config.grid_size) {
                    Ok(d) => d,
                    Err(SetarError::NoValidSplit) => return Ok(None),
                    Err(e) => return Err(e),
                };
                let parent = fit_rows(matrix, node_rows)?;
                let good = is_good_split(parent.sse, decision.total_sse, node_rows.len(), p, &config.stopping, depth)?;
                Ok(good.then_some(decision))
            })
            .collect();

        let mut next = Vec::new();
        for (&id, outcome) in frontier.iter().zip(outcomes) {
            let Slot::Open(node_rows) = std::mem::replace(&mut slots[id], Slot::Frozen(Vec::new())) else {
                unreachable!("frontier holds open nodes")
            };
            match outcome? {
                Some(decision) => {
                    let (l, r) = split_node(matrix, &node_rows, &decision);
                    let left = slots.len();
                    slots.push(Slot::Open(l));
                    slots.push(Slot::Open(r));
                    slots[id] = Slot::Split { decision, left, right: left + 1 };
                    next.push(left);
                    next.push(left + 1);
                }
                None => slots[id] = Slot::Frozen(node_rows),
            }
        }
        if next.is_empty() {
            break;
        }
        depth_reached = depth + 1;
        frontier = next;
    }

    let leaf_fits: Vec<Option<Result<LeafModel>>> = slots
        .par_iter()
        .map(|slot| match slot {
            Slot::Open(r) | Slot::Frozen(r) => Some(fit_rows(matrix, r).map(|fit| LeafModel { fit, n_train_rows: r.len() })),
            Slot::Split { .. } => None,
        })
        .collect();

    let mut nodes = Vec::with_capacity(slots.len());
    let mut rows_per_leaf = Vec::new();
    for (slot, leaf) in slots.into_iter().zip(leaf_fits) {
        match (slot, leaf) {
            (Slot::Split { decision, left, right }, _) => nodes.push(TreeNode::Internal { decision, left, right }),
            (_, Some(model)) => {
                let model = model?;
                rows_per_leaf.push(model.n_train_rows);
                nodes.push(TreeNode::Leaf(model));
            }
            (_, None) => unreachable!("every unsplit node has a leaf fit"),
        }
    }

    Ok(SetarTree {
        nodes,
        config: *config,
        layout: InputLayout {
            n_lags: matrix.n_lags(),
            column_names: matrix.column_names().to_vec(),
            covariates: matrix.covariates().to_vec(),
            projection: None,
        },
        summary: TrainingSummary { depth: depth_reached, leaf_count: rows_per_leaf.len(), rows_per_leaf },
    })
}

/// Single global linear autoregression over all rows.
pub fn train_pr_baseline(matrix: &EmbeddedMatrix) -> Result<LeafModel> {
    let rows: Vec<usize> = (0..matrix.len()).collect();
    let fit = fit_rows(matrix, &rows)?;
    Ok(LeafModel { fit, n_train_rows: rows.len() })
}

impl SetarTree {
    pub(crate) fn from_parts(nodes: Vec<TreeNode>, config: TreeConfig, layout: InputLayout, summary: TrainingSummary) -> Result<Self> {
        let tree = Self { nodes, config, layout, summary };
        tree.check_structure()?;
        Ok(tree)
    }

    /// Single-leaf tree holding a pooled regression.
    pub fn from_baseline(model: LeafModel, matrix: &EmbeddedMatrix, config: TreeConfig) -> Self {
        let rows = model.n_train_rows;
        Self {
            nodes: vec![TreeNode::Leaf(model)],
            config,
            layout: InputLayout {
                n_lags: matrix.n_lags(),
                column_names: matrix.column_names().to_vec(),
                covariates: matrix.covariates().to_vec(),
                projection: None,
            },
            summary: TrainingSummary { depth: 0, leaf_count: 1, rows_per_leaf: vec![rows] },
        }
    }

    fn check_structure(&self) -> Result<()> {
        let n = self.nodes.len();
        if n == 0 {
            return Err(SetarError::ModelFormat("tree has no nodes".into()));
        }
        let width = self.trained_width();
        for node in &self.nodes {
            match node {
                TreeNode::Internal { decision, left, right } => {
                    if *left >= n || *right >= n || decision.column_index >= width {
                        return Err(SetarError::ModelFormat("split references a missing node or column".into()));
                    }
                }
                TreeNode::Leaf(m) => {
                    if m.n_predictors() != width {
                        return Err(SetarError::ModelFormat("leaf coefficient count does not match the columns".into()));
                    }
                }
            }
        }
        Ok(())
    }

    pub(crate) fn set_layout(&mut self, layout: InputLayout) {
        self.layout = layout;
    }

    pub fn config(&self) -> &TreeConfig {
        &self.config
    }

    pub fn layout(&self) -> &InputLayout {
        &self.layout
    }

    pub fn n_lags(&self) -> usize {
        self.layout.n_lags
    }

    pub fn column_names(&self) -> &[String] {
        &self.layout.column_names
    }

    pub fn summary(&self) -> &TrainingSummary {
        &self.summary
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn is_single_leaf(&self) -> bool {
        self.nodes.len() == 1
    }

    /// Number of columns the tree's splits and leaves are expressed in.
    fn trained_width(&self) -> usize {
        self.layout.projection.as_ref().map_or(self.layout.width(), Vec::len)
    }

    fn input_value(&self, instance: &[f64], column: usize) -> f64 {
        match &self.layout.projection {
            Some(cols) => instance[cols[column]],
            None => instance[column],
        }
    }

    fn check_width(&self, instance: &[f64]) -> Result<()> {
        if instance.len() != self.layout.width() {
            return Err(SetarError::DimensionMismatch { expected: self.layout.width(), found: instance.len() });
        }
        Ok(())
    }

    /// Index of the leaf node reached by `instance`.
    pub fn leaf_index(&self, instance: &[f64]) -> Result<usize> {
        self.check_width(instance)?;
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                TreeNode::Leaf(_) => return Ok(id),
                TreeNode::Internal { decision, left, right } => {
                    id = if self.input_value(instance, decision.column_index) < decision.threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn find_leaf(&self, instance: &[f64]) -> Result<&LeafModel> {
        match &self.nodes[self.leaf_index(instance)?] {
            TreeNode::Leaf(m) => Ok(m),
            TreeNode::Internal { .. } => unreachable!("leaf_index returns a leaf"),
        }
    }

    pub fn predict(&self, instance: &[f64]) -> Result<f64> {
        let leaf = self.find_leaf(instance)?;
        Ok(match &self.layout.projection {
            None => leaf.fit.predict(instance),
            Some(cols) => {
                let beta = &leaf.fit.beta;
                beta[0] + cols.iter().zip(&beta[1..]).map(|(&c, b)| b * instance[c]).sum::<f64>()
            }
        })
    }

    /// Split columns and thresholds in node order.
    pub fn splits(&self) -> Vec<(String, f64)> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Internal { decision, .. } => {
                    let name = match &self.layout.projection {
                        Some(cols) => self.layout.column_names[cols[decision.column_index]].clone(),
                        None => self.layout.column_names[decision.column_index].clone(),
                    };
                    Some((name, decision.threshold))
                }
                TreeNode::Leaf(_) => None,
            })
            .collect()
    }
}

/// Recursive `horizon`-step forecasts for every series of `collection`.
pub fn forecast(tree: &SetarTree, collection: &SeriesCollection, horizon: usize) -> Result<ForecastMatrix> {
    let specs = &tree.layout.covariates;
    let test = create_test_set(collection, tree.layout.n_lags, Some(specs))?;
    recursive_forecast(test, horizon, |x| tree.predict(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::create_input_matrix;
    use crate::stopping::StoppingCriterion;

    fn two_regime_rows(n: usize) -> EmbeddedMatrix {
        // y = 1 + x below 0.5, y = 3 - 2x above; small deterministic wiggle.
        let rows: Vec<(Vec<f64>, f64)> = (0..n)
            .map(|i| {
                let x = i as f64 / n as f64;
                let wiggle = 0.01 * ((i * 7919) % 13) as f64 / 13.0;
                let y = if x < 0.5 { 1.0 + x } else { 3.0 - 2.0 * x };
                (vec![x], y + wiggle)
            })
            .collect();
        EmbeddedMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn splits_piecewise_linear_data() {
        let m = two_regime_rows(400);
        let tree = train_tree(&m, &TreeConfig::default()).unwrap();
        assert!(tree.summary().depth >= 1);
        let (col, thr) = &tree.splits()[0];
        assert_eq!(col, "L1");
        assert!((thr - 0.5).abs() < 0.07, "{thr}");
        assert_eq!(tree.summary().rows_per_leaf.iter().sum::<usize>(), 400);
    }

    #[test]
    fn zero_depth_is_the_pooled_regression() {
        let m = two_regime_rows(200);
        let cfg = TreeConfig { stopping: StoppingConfig { max_depth: 0, ..Default::default() }, ..Default::default() };
        let tree = train_tree(&m, &cfg).unwrap();
        assert!(tree.is_single_leaf());
        let pr = train_pr_baseline(&m).unwrap();
        assert_eq!(tree.find_leaf(&[0.3]).unwrap(), &pr);
    }

    #[test]
    fn routing_uses_strict_less() {
        let m = two_regime_rows(400);
        let tree = train_tree(&m, &TreeConfig::default()).unwrap();
        let TreeNode::Internal { decision, left, right } = &tree.nodes()[0] else { panic!("root should split") };
        let below = tree.leaf_index(&[decision.threshold - 1e-9]).unwrap();
        let at = tree.leaf_index(&[decision.threshold]).unwrap();
        assert_ne!(below, at);
        assert!(*left != *right);
        assert!(matches!(tree.leaf_index(&[0.1, 0.2]), Err(SetarError::DimensionMismatch { .. })));
    }

    #[test]
    fn identity_leaf_gives_flat_forecast() {
        let c = SeriesCollection::from_values(vec![("a", vec![1.0, 2.0, 3.0, 4.0])]).unwrap();
        let m = create_input_matrix(&c, 2, None).unwrap();
        let model = LeafModel {
            fit: LinearFit { beta: vec![0.0, 1.0, 0.0], sse: 0.0, n_obs: 2, n_params: 3, rank: 3 },
            n_train_rows: 2,
        };
        let tree = SetarTree::from_baseline(model, &m, TreeConfig::default());
        let f = forecast(&tree, &c, 5).unwrap();
        assert_eq!(f.row(0), [4.0; 5]);
    }

    #[test]
    fn predict_leaf_checks_dimension() {
        let model = LeafModel { fit: LinearFit { beta: vec![1.0, 2.0], sse: 0.0, n_obs: 3, n_params: 2, rank: 2 }, n_train_rows: 3 };
        assert_eq!(predict_leaf(&model, &[3.0]).unwrap(), 7.0);
        assert!(predict_leaf(&model, &[3.0, 1.0]).is_err());
    }

    #[test]
    fn tiny_matrix_rejected() {
        let m = EmbeddedMatrix::from_rows(&[(vec![1.0], 1.0), (vec![2.0], 2.0)]).unwrap();
        assert!(matches!(train_tree(&m, &TreeConfig::default()), Err(SetarError::TooFewRows { .. })));
    }

    #[test]
    fn error_reduction_alone_grows_deeper() {
        let m = two_regime_rows(400);
        let lin = TreeConfig {
            stopping: StoppingConfig { criterion: StoppingCriterion::ErrorRed, error_threshold: 0.0, ..Default::default() },
            ..Default::default()
        };
        let deep = train_tree(&m, &lin).unwrap();
        let shallow = train_tree(&m, &TreeConfig::default()).unwrap();
        assert!(deep.summary().leaf_count >= shallow.summary().leaf_count);
    }
}
