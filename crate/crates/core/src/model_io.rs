//! Versioned s-expression model files.
//!
//! ```text
//! (setar-tree (version 1)
//!   (config (criterion both) (alpha0 0.05) (divider 2.0) (error-threshold 0.03)
//!           (max-depth 1000) (grid-size 15))
//!   (layout (n-lags 3) (columns "L1" "L2" "L3") (covariates) (projection))
//!   (summary (depth 1) (leaf-count 2) (rows-per-leaf 40 60))
//!   (nodes
//!     (split (column 0) (threshold 0.5) (children 1 2) (sse 1.5 2.5 4.0) (counts 40 60))
//!     (leaf (beta 0.1 0.9 0.0 0.0) (sse 1.5) (n-obs 40) (rank 4) (rows 40))
//!     (leaf ...)))
//! ```
//!
//! Floats are written in shortest round-trip form, so a saved model reloads
//! bit for bit. A forest file wraps its config and one `(member ...)` per
//! tree, each holding the member's stopping settings, its column subset and
//! a full `setar-tree` form.

use std::fmt::Write as _;

use crate::data::{CovariateKind, CovariateSpec};
use crate::error::{Result, SetarError};
use crate::forest::{ForestConfig, ForestMember, SetarForest};
use crate::linalg::LinearFit;
use crate::split::SplitDecision;
use crate::stopping::StoppingConfig;
use crate::tree::{InputLayout, LeafModel, SetarTree, TrainingSummary, TreeConfig, TreeNode};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Sexp {
    Atom(String),
    Str(String),
    List(Vec<Sexp>),
}

fn format_err(message: impl Into<String>) -> SetarError {
    SetarError::ModelFormat(message.into())
}

pub fn parse_sexp(text: &str) -> Result<Sexp> {
    let mut parser = Parser { chars: text.char_indices().peekable(), text, line: 1 };
    let value = parser.value()?.ok_or_else(|| format_err("empty model file"))?;
    if parser.value()?.is_some() {
        return Err(SetarError::Parse { line: parser.line, message: "trailing content after the model".into() });
    }
    Ok(value)
}

struct Parser<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    text: &'a str,
    line: usize,
}

impl Parser<'_> {
    fn err(&self, message: &str) -> SetarError {
        SetarError::Parse { line: self.line, message: message.into() }
    }

    fn skip_blank(&mut self) {
        while let Some(&(_, c)) = self.chars.peek() {
            if c == ';' {
                while let Some(&(_, c)) = self.chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.chars.next();
                }
            } else if c.is_whitespace() {
                if c == '\n' {
                    self.line += 1;
                }
                self.chars.next();
            } else {
                break;
            }
        }
    }

    fn value(&mut self) -> Result<Option<Sexp>> {
        self.skip_blank();
        let Some(&(start, c)) = self.chars.peek() else { return Ok(None) };
        match c {
            '(' => {
                self.chars.next();
                let mut items = Vec::new();
                loop {
                    self.skip_blank();
                    match self.chars.peek() {
                        None => return Err(self.err("unclosed `(`")),
                        Some(&(_, ')')) => {
                            self.chars.next();
                            return Ok(Some(Sexp::List(items)));
                        }
                        Some(_) => items.push(self.value()?.expect("input is not exhausted")),
                    }
                }
            }
            ')' => Err(self.err("unexpected `)`")),
            '"' => {
                self.chars.next();
                let mut s = String::new();
                loop {
                    match self.chars.next() {
                        None => return Err(self.err("unterminated string")),
                        Some((_, '"')) => return Ok(Some(Sexp::Str(s))),
                        Some((_, '\\')) => match self.chars.next() {
                            Some((_, 'n')) => s.push('\n'),
                            Some((_, c @ ('"' | '\\'))) => s.push(c),
                            _ => return Err(self.err("bad escape in string")),
                        },
                        Some((_, c)) => {
                            if c == '\n' {
                                self.line += 1;
                            }
                            s.push(c)
                        }
                    }
                }
            }
            _ => {
                let mut end = start;
                while let Some(&(i, c)) = self.chars.peek() {
                    if c.is_whitespace() || matches!(c, '(' | ')' | '"' | ';') {
                        break;
                    }
                    end = i + c.len_utf8();
                    self.chars.next();
                }
                Ok(Some(Sexp::Atom(self.text[start..end].to_string())))
            }
        }
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn list_of<T: std::fmt::Debug>(key: &str, items: &[T]) -> String {
    let mut s = format!("({key}");
    for v in items {
        write!(s, " {v:?}").expect("writing to a String cannot fail");
    }
    s.push(')');
    s
}

fn write_stopping(s: &StoppingConfig) -> String {
    format!(
        "(criterion {}) (alpha0 {:?}) (divider {:?}) (error-threshold {:?}) (max-depth {})",
        s.criterion.as_str(),
        s.alpha0,
        s.significance_divider,
        s.error_threshold,
        s.max_depth
    )
}

fn write_tree(tree: &SetarTree, out: &mut String, indent: &str) {
    let cfg = tree.config();
    let layout = tree.layout();
    let summary = tree.summary();
    let w = |out: &mut String, line: String| {
        out.push_str(indent);
        out.push_str(&line);
        out.push('\n');
    };
    w(out, format!("(setar-tree (version {FORMAT_VERSION})"));
    w(out, format!("  (config {} (grid-size {}))", write_stopping(&cfg.stopping), cfg.grid_size));
    let columns: Vec<String> = layout.column_names.iter().map(|c| quote(c)).collect();
    let covariates: Vec<String> = layout
        .covariates
        .iter()
        .map(|c| {
            let cats: Vec<String> = c.categories.iter().map(|s| quote(s)).collect();
            format!("(covariate {} {} ({}))", quote(&c.name), c.kind.as_str(), cats.join(" "))
        })
        .collect();
    let mut layout_line = format!("  (layout (n-lags {}) (columns {}) (covariates", layout.n_lags, columns.join(" "));
    for c in &covariates {
        layout_line.push(' ');
        layout_line.push_str(c);
    }
    layout_line.push_str(") ");
    layout_line.push_str(&list_of("projection", layout.projection.as_deref().unwrap_or(&[])));
    layout_line.push(')');
    w(out, layout_line);
    w(
        out,
        format!(
            "  (summary (depth {}) (leaf-count {}) {})",
            summary.depth,
            summary.leaf_count,
            list_of("rows-per-leaf", &summary.rows_per_leaf)
        ),
    );
    w(out, "  (nodes".into());
    for node in tree.nodes() {
        let line = match node {
            TreeNode::Internal { decision: d, left, right } => format!(
                "    (split (column {}) (threshold {:?}) (children {left} {right}) (sse {:?} {:?} {:?}) (counts {} {}))",
                d.column_index, d.threshold, d.left_sse, d.right_sse, d.total_sse, d.left_count, d.right_count
            ),
            TreeNode::Leaf(m) => format!(
                "    (leaf {} (sse {:?}) (n-obs {}) (rank {}) (rows {}))",
                list_of("beta", &m.fit.beta),
                m.fit.sse,
                m.fit.n_obs,
                m.fit.rank,
                m.n_train_rows
            ),
        };
        w(out, line);
    }
    out.truncate(out.len() - 1);
    out.push_str("))\n");
}

pub fn tree_to_string(tree: &SetarTree) -> String {
    let mut out = String::new();
    write_tree(tree, &mut out, "");
    out
}

pub fn forest_to_string(forest: &SetarForest) -> String {
    let c = forest.config();
    let mut out = format!("(setar-forest (version {FORMAT_VERSION})\n");
    writeln!(
        out,
        "  (config (n-trees {}) (bagging-fraction {:?}) (feature-fraction {:?}) (seed {}) (randomization {}) \
         (alpha0-range {:?} {:?}) (divider-range {:?} {:?}) (error-threshold-range {:?} {:?}) (grid-size {}) \
         (aggregation {}) (base {}))",
        c.n_trees,
        c.bagging_fraction,
        c.feature_fraction,
        c.seed,
        c.randomization.as_str(),
        c.alpha0_range.0,
        c.alpha0_range.1,
        c.divider_range.0,
        c.divider_range.1,
        c.error_threshold_range.0,
        c.error_threshold_range.1,
        c.grid_size,
        c.aggregation.as_str(),
        write_stopping(&c.base)
    )
    .expect("writing to a String cannot fail");
    out.push_str("  (members");
    for m in forest.members() {
        write!(
            out,
            "\n    (member (stopping {}) {}\n",
            write_stopping(&m.stopping),
            list_of("columns", m.columns.as_deref().unwrap_or(&[]))
        )
        .expect("writing to a String cannot fail");
        write_tree(&m.tree, &mut out, "      ");
        out.truncate(out.len() - 1);
        out.push(')');
    }
    out.push_str("))\n");
    out
}

// Reading.

fn items<'a>(s: &'a Sexp, what: &str) -> Result<&'a [Sexp]> {
    match s {
        Sexp::List(v) => Ok(v),
        _ => Err(format_err(format!("expected a list for {what}"))),
    }
}

fn atom<'a>(s: &'a Sexp, what: &str) -> Result<&'a str> {
    match s {
        Sexp::Atom(a) => Ok(a),
        _ => Err(format_err(format!("expected an atom for {what}"))),
    }
}

fn string(s: &Sexp, what: &str) -> Result<String> {
    match s {
        Sexp::Str(a) => Ok(a.clone()),
        _ => Err(format_err(format!("expected a string for {what}"))),
    }
}

fn head_is(s: &Sexp, key: &str) -> bool {
    matches!(s, Sexp::List(v) if matches!(v.first(), Some(Sexp::Atom(a)) if a == key))
}

/// Arguments of the `(key ...)` form inside `list`.
fn field<'a>(list: &'a [Sexp], key: &str) -> Result<&'a [Sexp]> {
    list.iter()
        .find(|s| head_is(s, key))
        .map(|s| &items(s, key).expect("checked by head_is")[1..])
        .ok_or_else(|| format_err(format!("missing `{key}`")))
}

fn num<T: std::str::FromStr>(s: &Sexp, what: &str) -> Result<T> {
    atom(s, what)?.parse().map_err(|_| format_err(format!("bad value for {what}")))
}

fn one<T: std::str::FromStr>(list: &[Sexp], key: &str) -> Result<T> {
    match field(list, key)? {
        [v] => num(v, key),
        _ => Err(format_err(format!("`{key}` takes one value"))),
    }
}

fn many<T: std::str::FromStr>(list: &[Sexp], key: &str) -> Result<Vec<T>> {
    field(list, key)?.iter().map(|v| num(v, key)).collect()
}

fn pair(list: &[Sexp], key: &str) -> Result<(f64, f64)> {
    match many::<f64>(list, key)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(format_err(format!("`{key}` takes two values"))),
    }
}

fn check_header(list: &[Sexp], tag: &str) -> Result<()> {
    match list.first() {
        Some(Sexp::Atom(a)) if a == tag => {}
        _ => return Err(format_err(format!("not a {tag} file"))),
    }
    let version: u64 = one(list, "version")?;
    if version != FORMAT_VERSION {
        return Err(format_err(format!("unsupported {tag} version {version}")));
    }
    Ok(())
}

fn read_stopping(list: &[Sexp]) -> Result<StoppingConfig> {
    let criterion = atom(field(list, "criterion")?.first().ok_or_else(|| format_err("empty criterion"))?, "criterion")?;
    Ok(StoppingConfig {
        criterion: criterion.parse().map_err(|_| format_err(format!("unknown criterion `{criterion}`")))?,
        alpha0: one(list, "alpha0")?,
        significance_divider: one(list, "divider")?,
        error_threshold: one(list, "error-threshold")?,
        max_depth: one(list, "max-depth")?,
    })
}

fn read_tree(s: &Sexp) -> Result<SetarTree> {
    let top = items(s, "setar-tree")?;
    check_header(top, "setar-tree")?;
    let cfg = field(top, "config")?;
    let config = TreeConfig { stopping: read_stopping(cfg)?, grid_size: one(cfg, "grid-size")? };

    let lay = field(top, "layout")?;
    let column_names = field(lay, "columns")?.iter().map(|c| string(c, "column")).collect::<Result<Vec<_>>>()?;
    let covariates = field(lay, "covariates")?
        .iter()
        .map(|c| match items(c, "covariate")? {
            [Sexp::Atom(tag), name, kind, cats] if tag == "covariate" => {
                let kind: CovariateKind =
                    atom(kind, "covariate kind")?.parse().map_err(|_| format_err("unknown covariate kind"))?;
                let categories = items(cats, "categories")?.iter().map(|c| string(c, "category")).collect::<Result<_>>()?;
                Ok(CovariateSpec { name: string(name, "covariate name")?, kind, categories })
            }
            _ => Err(format_err("malformed covariate")),
        })
        .collect::<Result<Vec<_>>>()?;
    let projection: Vec<usize> = many(lay, "projection")?;
    let layout = InputLayout {
        n_lags: one(lay, "n-lags")?,
        column_names,
        covariates,
        projection: (!projection.is_empty()).then_some(projection),
    };

    let sum = field(top, "summary")?;
    let summary = TrainingSummary {
        depth: one(sum, "depth")?,
        leaf_count: one(sum, "leaf-count")?,
        rows_per_leaf: many(sum, "rows-per-leaf")?,
    };

    let nodes = field(top, "nodes")?
        .iter()
        .map(|n| {
            let body = items(n, "node")?;
            if head_is(n, "split") {
                let [left, right]: [usize; 2] =
                    many(body, "children")?.try_into().map_err(|_| format_err("split needs two children"))?;
                let [left_sse, right_sse, total_sse]: [f64; 3] =
                    many(body, "sse")?.try_into().map_err(|_| format_err("split needs three sse values"))?;
                let [left_count, right_count]: [usize; 2] =
                    many(body, "counts")?.try_into().map_err(|_| format_err("split needs two counts"))?;
                let decision = SplitDecision {
                    column_index: one(body, "column")?,
                    threshold: one(body, "threshold")?,
                    left_sse,
                    right_sse,
                    total_sse,
                    left_count,
                    right_count,
                };
                Ok(TreeNode::Internal { decision, left, right })
            } else if head_is(n, "leaf") {
                let beta: Vec<f64> = many(body, "beta")?;
                if beta.is_empty() {
                    return Err(format_err("leaf has no coefficients"));
                }
                let fit = LinearFit {
                    n_params: beta.len(),
                    beta,
                    sse: one(body, "sse")?,
                    n_obs: one(body, "n-obs")?,
                    rank: one(body, "rank")?,
                };
                Ok(TreeNode::Leaf(LeafModel { fit, n_train_rows: one(body, "rows")? }))
            } else {
                Err(format_err("node must be `split` or `leaf`"))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    SetarTree::from_parts(nodes, config, layout, summary)
}

pub fn tree_from_str(text: &str) -> Result<SetarTree> {
    read_tree(&parse_sexp(text)?)
}

pub fn forest_from_str(text: &str) -> Result<SetarForest> {
    let root = parse_sexp(text)?;
    let top = items(&root, "setar-forest")?;
    check_header(top, "setar-forest")?;
    let c = field(top, "config")?;
    let word = |key: &str| -> Result<&str> { atom(field(c, key)?.first().ok_or_else(|| format_err(key.to_string()))?, key) };
    let config = ForestConfig {
        n_trees: one(c, "n-trees")?,
        bagging_fraction: one(c, "bagging-fraction")?,
        feature_fraction: one(c, "feature-fraction")?,
        seed: one(c, "seed")?,
        randomization: word("randomization")?.parse().map_err(|_| format_err("unknown randomization"))?,
        alpha0_range: pair(c, "alpha0-range")?,
        divider_range: pair(c, "divider-range")?,
        error_threshold_range: pair(c, "error-threshold-range")?,
        base: read_stopping(field(c, "base")?)?,
        grid_size: one(c, "grid-size")?,
        aggregation: word("aggregation")?.parse().map_err(|_| format_err("unknown aggregation"))?,
    };
    let members = field(top, "members")?
        .iter()
        .map(|m| {
            if !head_is(m, "member") {
                return Err(format_err("expected `member`"));
            }
            let body = items(m, "member")?;
            let columns: Vec<usize> = many(body, "columns")?;
            let tree = body.iter().find(|s| head_is(s, "setar-tree")).ok_or_else(|| format_err("member has no tree"))?;
            Ok(ForestMember {
                tree: read_tree(tree)?,
                stopping: read_stopping(field(body, "stopping")?)?,
                sample_rows: Vec::new(),
                columns: (!columns.is_empty()).then_some(columns),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if members.len() != config.n_trees {
        return Err(format_err(format!("forest declares {} trees but holds {}", config.n_trees, members.len())));
    }
    SetarForest::from_parts(members, config)
}
