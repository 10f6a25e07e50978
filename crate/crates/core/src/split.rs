//! Grid search for the (column, threshold) pair that minimizes the pooled
//! child SSE.
//!
//! Rows with `value < threshold` go left and rows with `value >= threshold` go
//! right. For each column the rows are sorted once; the left inner products
//! grow as the threshold moves up the grid and the right child is obtained by
//! subtraction from the parent.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::EmbeddedMatrix;
use crate::error::{Result, SetarError};
use crate::linalg::{fit_from_inner_products, right_complement, InnerProducts};

pub const DEFAULT_GRID_SIZE: usize = 15;

/// Smallest child that still leaves one residual degree of freedom.
pub fn min_child_size(n_predictors: usize) -> usize {
    n_predictors + 2
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdGrid {
    pub values: Vec<f64>,
    pub source_column: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitDecision {
    pub column_index: usize,
    pub threshold: f64,
    pub left_sse: f64,
    pub right_sse: f64,
    pub total_sse: f64,
    pub left_count: usize,
    pub right_count: usize,
}

impl SplitDecision {
    #[inline]
    pub fn goes_left(&self, predictors: &[f64]) -> bool {
        predictors[self.column_index] < self.threshold
    }
}

/// Left/right fit quality for one threshold of one column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateEval {
    pub threshold: f64,
    pub left_count: usize,
    pub right_count: usize,
    pub left_sse: f64,
    pub right_sse: f64,
}

impl CandidateEval {
    pub fn total_sse(&self) -> f64 {
        self.left_sse + self.right_sse
    }
}

/// `q` quantiles at probabilities `k / (q + 1)`, linearly interpolated between
/// order statistics, deduplicated and restricted to the open interval
/// `(min, max)`. When every quantile lands on an extreme value (heavily tied
/// columns such as one-hot indicators) the midpoint between the two smallest
/// distinct values is used instead.
pub fn make_threshold_grid(column_values: &[f64], q: usize) -> Result<Vec<f64>> {
    let mut sorted = column_values.to_vec();
    sorted.sort_by(f64::total_cmp);
    grid_from_sorted(&sorted, q)
}

fn grid_from_sorted(sorted: &[f64], q: usize) -> Result<Vec<f64>> {
    if q == 0 {
        return Err(SetarError::InvalidConfig("grid size must be at least 1".into()));
    }
    let (Some(&lo), Some(&hi)) = (sorted.first(), sorted.last()) else {
        return Err(SetarError::DegenerateColumn);
    };
    if lo == hi {
        return Err(SetarError::DegenerateColumn);
    }
    let n = sorted.len();
    let mut grid: Vec<f64> = Vec::with_capacity(q);
    for k in 1..=q {
        let h = (n - 1) as f64 * k as f64 / (q + 1) as f64;
        let i = h.floor() as usize;
        let frac = h - i as f64;
        let v = if i + 1 < n { sorted[i] + frac * (sorted[i + 1] - sorted[i]) } else { sorted[n - 1] };
        if v > lo && v < hi && grid.last().is_none_or(|&last| v > last) {
            grid.push(v);
        }
    }
    if grid.is_empty() {
        let next = sorted.iter().copied().find(|&v| v > lo).unwrap_or(hi);
        grid.push(lo + 0.5 * (next - lo));
    }
    Ok(grid)
}

/// Grid for one column of the rows in a node.
pub fn column_grid(matrix: &EmbeddedMatrix, rows: &[usize], column: usize, q: usize) -> Result<ThresholdGrid> {
    let values: Vec<f64> = rows.iter().map(|&i| matrix.value(i, column)).collect();
    Ok(ThresholdGrid { values: make_threshold_grid(&values, q)?, source_column: column })
}

/// Evaluate every grid threshold of `column` whose children both hold at
/// least `min_child` rows, in ascending threshold order.
pub fn scan_column(
    matrix: &EmbeddedMatrix,
    rows: &[usize],
    parent: &InnerProducts,
    column: usize,
    grid_size: usize,
    min_child: usize,
) -> Result<Vec<CandidateEval>> {
    let mut order: Vec<usize> = rows.to_vec();
    order.sort_by(|&a, &b| matrix.value(a, column).total_cmp(&matrix.value(b, column)));
    let sorted: Vec<f64> = order.iter().map(|&i| matrix.value(i, column)).collect();
    let grid = match grid_from_sorted(&sorted, grid_size) {
        Ok(g) => g,
        Err(SetarError::DegenerateColumn) => return Ok(Vec::new()),
        Err(e) => return Err(e),
    };

    let n = order.len();
    let mut left = InnerProducts::zero(matrix.n_cols());
    let mut pos = 0;
    let mut out = Vec::with_capacity(grid.len());
    for &threshold in &grid {
        while pos < n && sorted[pos] < threshold {
            let i = order[pos];
            left.add_row(matrix.predictors(i), matrix.target(i));
            pos += 1;
        }
        if pos < min_child || n - pos < min_child {
            continue;
        }
        let right = right_complement(parent, &left);
        let (Ok(lf), Ok(rf)) = (fit_from_inner_products(&left), fit_from_inner_products(&right)) else {
            continue;
        };
        out.push(CandidateEval {
            threshold,
            left_count: pos,
            right_count: n - pos,
            left_sse: lf.sse,
            right_sse: rf.sse,
        });
    }
    Ok(out)
}

/// Best split of a node over `candidate_columns`.
///
/// Ties are broken towards the lower column index, then the lower threshold.
/// Columns are scanned in parallel; the reduction runs in column order.
pub fn get_opt_params(
    matrix: &EmbeddedMatrix,
    rows: &[usize],
    candidate_columns: &[usize],
    grid_size: usize,
) -> Result<SplitDecision> {
    let min_child = min_child_size(matrix.n_cols());
    if rows.len() < 2 * min_child {
        return Err(SetarError::NoValidSplit);
    }
    if let Some(&bad) = candidate_columns.iter().find(|&&c| c >= matrix.n_cols()) {
        return Err(SetarError::DimensionMismatch { expected: matrix.n_cols(), found: bad + 1 });
    }
    let parent = InnerProducts::from_matrix(matrix, rows);

    let per_column: Vec<Result<Option<SplitDecision>>> = candidate_columns
        .par_iter()
        .map(|&column| {
            let evals = scan_column(matrix, rows, &parent, column, grid_size, min_child)?;
            let mut best: Option<CandidateEval> = None;
            for e in evals {
                if best.is_none_or(|b| e.total_sse() < b.total_sse()) {
                    best = Some(e);
                }
            }
            Ok(best.map(|e| SplitDecision {
                column_index: column,
                threshold: e.threshold,
                left_sse: e.left_sse,
                right_sse: e.right_sse,
                total_sse: e.total_sse(),
                left_count: e.left_count,
                right_count: e.right_count,
            }))
        })
        .collect();

    let mut best: Option<SplitDecision> = None;
    for candidate in per_column {
        if let Some(d) = candidate? {
            let better = match best {
                None => true,
                Some(b) => d.total_sse < b.total_sse || (d.total_sse == b.total_sse && d.column_index < b.column_index),
            };
            if better {
                best = Some(d);
            }
        }
    }
    best.ok_or(SetarError::NoValidSplit)
}

/// Partition `rows` by the decision, preserving row order within each side.
pub fn split_node(matrix: &EmbeddedMatrix, rows: &[usize], decision: &SplitDecision) -> (Vec<usize>, Vec<usize>) {
    rows.iter().partition(|&&i| decision.goes_left(matrix.predictors(i)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_on_one_to_sixteen() {
        let values: Vec<f64> = (1..=16).map(f64::from).collect();
        let grid = make_threshold_grid(&values, 15).unwrap();
        // Type-7 quantile at p = k/16 on 1..16 is 1 + 15k/16.
        assert_eq!(grid.len(), 15);
        for (k, g) in grid.iter().enumerate() {
            assert_abs_diff_eq!(*g, 1.0 + 15.0 * (k + 1) as f64 / 16.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(grid[0], 1.9375, epsilon = 1e-12);
        assert_abs_diff_eq!(grid[14], 15.0625, epsilon = 1e-12);
    }

    #[test]
    fn constant_column_is_degenerate() {
        assert!(matches!(make_threshold_grid(&[2.0; 10], 15), Err(SetarError::DegenerateColumn)));
        assert!(matches!(make_threshold_grid(&[], 15), Err(SetarError::DegenerateColumn)));
    }

    #[test]
    fn binary_column_grid() {
        let g = make_threshold_grid(&[0.0, 1.0], 15).unwrap();
        assert!(!g.is_empty());
        assert!(g.iter().all(|&t| t > 0.0 && t < 1.0));
        assert!(g.windows(2).all(|w| w[0] < w[1]));

        // Heavily tied indicator: every quantile lands on 0, midpoint fallback.
        let mut v = vec![0.0; 99];
        v.push(1.0);
        assert_eq!(make_threshold_grid(&v, 15).unwrap(), vec![0.5]);
    }

    #[test]
    fn strict_less_goes_left() {
        let m = EmbeddedMatrix::from_rows(&[(vec![0.2], 0.0), (vec![0.5], 0.0), (vec![0.9], 0.0)]).unwrap();
        let d = SplitDecision {
            column_index: 0,
            threshold: 0.5,
            left_sse: 0.0,
            right_sse: 0.0,
            total_sse: 0.0,
            left_count: 1,
            right_count: 2,
        };
        let (l, r) = split_node(&m, &[0, 1, 2], &d);
        assert_eq!(l, vec![0]);
        assert_eq!(r, vec![1, 2]);
    }

    #[test]
    fn tiny_node_has_no_split() {
        let rows: Vec<(Vec<f64>, f64)> = (0..5).map(|i| (vec![i as f64; 6], i as f64)).collect();
        let m = EmbeddedMatrix::from_rows(&rows).unwrap();
        assert_eq!(min_child_size(6), 8);
        let err = get_opt_params(&m, &[0, 1, 2, 3, 4], &[0, 1, 2, 3, 4, 5], 15).unwrap_err();
        assert!(matches!(err, SetarError::NoValidSplit));
    }

    #[test]
    fn linear_data_still_returns_a_split() {
        let rows: Vec<(Vec<f64>, f64)> = (0..100).map(|i| {
            let x = i as f64 / 10.0;
            (vec![x], 1.0 + 2.0 * x)
        }).collect();
        let m = EmbeddedMatrix::from_rows(&rows).unwrap();
        let all: Vec<usize> = (0..100).collect();
        let d = get_opt_params(&m, &all, &[0], 15).unwrap();
        assert_eq!(d.left_count + d.right_count, 100);
        assert!(d.total_sse < 1e-9);
    }
}
