use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use setar_core::data::EmbeddedMatrix;
use setar_core::linalg::{fit_from_inner_products, fit_rows, right_complement, InnerProducts};
use setar_core::split::{make_threshold_grid, scan_column, min_child_size, split_node, get_opt_params};

/// Residual sum of squares of the SVD least-squares solution with intercept.
fn svd_sse(rows: &[(Vec<f64>, f64)]) -> f64 {
    let p = rows[0].0.len() + 1;
    let x = DMatrix::from_fn(rows.len(), p, |i, j| if j == 0 { 1.0 } else { rows[i].0[j - 1] });
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    let beta = x.clone().svd(true, true).solve(&y, 1e-12).unwrap();
    (&x * beta - y).norm_squared()
}

fn rows_strategy() -> impl Strategy<Value = Vec<(Vec<f64>, f64)>> {
    (1usize..5).prop_flat_map(|p| {
        prop::collection::vec((prop::collection::vec(-10.0f64..10.0, p), -10.0f64..10.0), (p + 3)..60)
    })
}

fn as_matrix(rows: &[(Vec<f64>, f64)]) -> EmbeddedMatrix {
    EmbeddedMatrix::from_rows(rows).unwrap()
}

proptest! {
    #[test]
    fn normal_equation_fit_matches_svd(rows in rows_strategy()) {
        let m = as_matrix(&rows);
        let all: Vec<usize> = (0..m.len()).collect();
        let fit = fit_rows(&m, &all).unwrap();
        let want = svd_sse(&rows);
        prop_assert!((fit.sse - want).abs() <= 1e-8 * want.max(1.0), "sse {} vs {}", fit.sse, want);
    }

    #[test]
    fn inner_products_are_additive(rows in rows_strategy(), cut in 0.0f64..1.0) {
        let m = as_matrix(&rows);
        let k = (cut * m.len() as f64) as usize;
        let all: Vec<usize> = (0..m.len()).collect();
        let whole = InnerProducts::from_matrix(&m, &all);
        let left = InnerProducts::from_matrix(&m, &all[..k]);
        let right = InnerProducts::from_matrix(&m, &all[k..]);

        let mut sum = left.clone();
        sum.add(&right);
        let complement = right_complement(&whole, &left);
        prop_assert_eq!(complement.count(), right.count());
        for (a, b) in sum.b_matrix().iter().zip(whole.b_matrix()) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        for (a, b) in complement.c().iter().zip(right.c()) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        prop_assert!((complement.d() - right.d()).abs() <= 1e-12 * right.d().max(1.0));
    }

    #[test]
    fn scan_candidates_match_direct_refits(rows in rows_strategy(), column_seed in 0usize..8) {
        let m = as_matrix(&rows);
        let column = column_seed % m.n_cols();
        let all: Vec<usize> = (0..m.len()).collect();
        let parent = InnerProducts::from_matrix(&m, &all);
        let min_child = min_child_size(m.n_cols());
        for cand in scan_column(&m, &all, &parent, column, 15, min_child).unwrap() {
            let (l, r): (Vec<usize>, Vec<usize>) = all.iter().partition(|&&i| m.value(i, column) < cand.threshold);
            prop_assert_eq!(l.len(), cand.left_count);
            prop_assert_eq!(r.len(), cand.right_count);
            prop_assert!(l.len() >= min_child && r.len() >= min_child);
            let want_l = fit_rows(&m, &l).unwrap().sse;
            let want_r = fit_rows(&m, &r).unwrap().sse;
            prop_assert!((cand.left_sse - want_l).abs() <= 1e-8 * want_l.max(1e-8));
            prop_assert!((cand.right_sse - want_r).abs() <= 1e-8 * want_r.max(1e-8));
        }
    }

    #[test]
    fn threshold_grid_is_strictly_inside_the_range(values in prop::collection::vec(-5.0f64..5.0, 2..200), q in 1usize..30) {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        match make_threshold_grid(&values, q) {
            Ok(grid) => {
                prop_assert!(!grid.is_empty() && grid.len() <= q);
                prop_assert!(grid.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(grid.iter().all(|&t| t > lo && t < hi));
            }
            Err(_) => prop_assert_eq!(lo, hi),
        }
    }

    #[test]
    fn best_split_never_raises_the_error(rows in rows_strategy()) {
        let m = as_matrix(&rows);
        let all: Vec<usize> = (0..m.len()).collect();
        let columns: Vec<usize> = (0..m.n_cols()).collect();
        if let Ok(decision) = get_opt_params(&m, &all, &columns, 15) {
            let parent = fit_rows(&m, &all).unwrap().sse;
            prop_assert!(decision.total_sse <= parent * (1.0 + 1e-9) + 1e-9);
            let (l, r) = split_node(&m, &all, &decision);
            prop_assert_eq!(l.len() + r.len(), all.len());
            prop_assert!(l.iter().all(|&i| decision.goes_left(m.predictors(i))));
            prop_assert!(r.iter().all(|&i| !decision.goes_left(m.predictors(i))));
        }
    }
}

#[test]
fn one_residual_degree_of_freedom_keeps_relative_accuracy() {
    // Nearly saturated fit: SSE is tiny next to sum y^2.
    let mut rows = Vec::new();
    for i in 0..5 {
        let x = i as f64 * 0.37 + 1.0;
        let noise = if i % 2 == 0 { 1e-5 } else { -1e-5 };
        rows.push((vec![x, x * x], 3.0 + 2.0 * x - 0.5 * x * x + noise));
    }
    let m = as_matrix(&rows);
    let ip = InnerProducts::from_matrix(&m, &(0..5).collect::<Vec<_>>());
    let got = fit_from_inner_products(&ip).unwrap().sse;
    let want = svd_sse(&rows);
    assert!((got - want).abs() <= 1e-6 * want, "{got} vs {want}");
}
