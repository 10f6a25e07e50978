//! Least-squares fits through the normal equations.
//!
//! Every fit includes an intercept: a predictor vector `x` is augmented to
//! `[1, x]` before it enters the inner products. Fits depend on the data only
//! through `B = sum xb xb^T`, `c = sum xb y` and `d = sum y^2`, which are
//! additive over disjoint row sets. The threshold scan relies on that: the
//! right child of a split is `parent - left`.
//!
//! The inner products are accumulated in double-double arithmetic (error-free
//! products and sums) and the SSE is evaluated from them as the quadratic form
//! `d - 2 beta^T c + beta^T B beta` in the same precision. `d - SSE` can exceed
//! SSE by many orders of magnitude for small, nearly saturated children, and
//! plain doubles lose all relative accuracy there.

use crate::data::{EmbeddedMatrix, InstanceRow};
use crate::error::{Result, SetarError};

/// A Cholesky pivot below `RANK_TOL` times the column's own diagonal entry
/// marks the column as linearly dependent on the columns before it.
pub const RANK_TOL: f64 = 1e-10;

/// Unevaluated sum `hi + lo` carrying about 106 significant bits.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Dd {
    hi: f64,
    lo: f64,
}

/// Dekker's splitting constant, 2^27 + 1.
const SPLITTER: f64 = 134_217_729.0;

#[inline(always)]
fn split(a: f64) -> (f64, f64) {
    let c = SPLITTER * a;
    let hi = c - (c - a);
    (hi, a - hi)
}

/// `a * b` as `p + e` exactly; `sa`, `sb` are the splits of `a`, `b`.
#[inline(always)]
fn two_prod(a: f64, sa: (f64, f64), b: f64, sb: (f64, f64)) -> (f64, f64) {
    let p = a * b;
    let e = ((sa.0 * sb.0 - p) + sa.0 * sb.1 + sa.1 * sb.0) + sa.1 * sb.1;
    (p, e)
}

#[inline(always)]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

impl Dd {
    #[inline(always)]
    fn value(self) -> f64 {
        self.hi + self.lo
    }

    #[inline(always)]
    fn add_parts(&mut self, p: f64, e: f64) {
        let (s, t) = two_sum(self.hi, p);
        self.hi = s;
        self.lo += t + e;
    }

    #[inline(always)]
    fn add(self, other: Dd) -> Dd {
        let (s, t) = two_sum(self.hi, other.hi);
        Dd { hi: s, lo: t + self.lo + other.lo }
    }

    #[inline(always)]
    fn sub(self, other: Dd) -> Dd {
        self.add(Dd { hi: -other.hi, lo: -other.lo })
    }

    #[inline(always)]
    fn mul_f64(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, split(self.hi), b, split(b));
        let (hi, lo) = two_sum(p, e + self.lo * b);
        Dd { hi, lo }
    }
}

/// Sufficient statistics of a linear regression with intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerProducts {
    dim: usize,
    /// Upper triangle (row-major, `j >= i`) of `B`; the strict lower part stays zero.
    b: Vec<Dd>,
    c: Vec<Dd>,
    d: Dd,
    count: usize,
}

impl InnerProducts {
    /// Zero statistics for `n_predictors` columns plus the intercept.
    pub fn zero(n_predictors: usize) -> Self {
        let dim = n_predictors + 1;
        Self { dim, b: vec![Dd::default(); dim * dim], c: vec![Dd::default(); dim], d: Dd::default(), count: 0 }
    }

    pub fn from_matrix(matrix: &EmbeddedMatrix, rows: &[usize]) -> Self {
        let mut ip = Self::zero(matrix.n_cols());
        for &i in rows {
            ip.add_row(matrix.predictors(i), matrix.target(i));
        }
        ip
    }

    /// Number of parameters, intercept included.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn d(&self) -> f64 {
        self.d.value()
    }

    pub fn c(&self) -> Vec<f64> {
        self.c.iter().map(|v| v.value()).collect()
    }

    /// Entry `(i, j)` of the symmetric matrix `B`.
    #[inline]
    pub fn b(&self, i: usize, j: usize) -> f64 {
        self.b_dd(i, j).value()
    }

    #[inline]
    fn b_dd(&self, i: usize, j: usize) -> Dd {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.b[i * self.dim + j]
    }

    /// Full symmetric `B`, row-major.
    pub fn b_matrix(&self) -> Vec<f64> {
        let p = self.dim;
        let mut out = vec![0.0; p * p];
        for i in 0..p {
            for j in 0..p {
                out[i * p + j] = self.b(i, j);
            }
        }
        out
    }

    /// Rank-one update with the augmented row `[1, x]`.
    #[inline]
    pub fn add_row(&mut self, x: &[f64], y: f64) {
        debug_assert_eq!(x.len() + 1, self.dim);
        let p = self.dim;
        self.b[0].add_parts(1.0, 0.0);
        for (j, &xj) in x.iter().enumerate() {
            self.b[j + 1].add_parts(xj, 0.0);
        }
        for (i, &xi) in x.iter().enumerate() {
            let si = split(xi);
            let row = &mut self.b[(i + 1) * p..(i + 2) * p];
            for (j, &xj) in x.iter().enumerate().skip(i) {
                let (prod, err) = two_prod(xi, si, xj, split(xj));
                row[j + 1].add_parts(prod, err);
            }
        }
        let sy = split(y);
        self.c[0].add_parts(y, 0.0);
        for (i, &xi) in x.iter().enumerate() {
            let (prod, err) = two_prod(xi, split(xi), y, sy);
            self.c[i + 1].add_parts(prod, err);
        }
        let (prod, err) = two_prod(y, sy, y, sy);
        self.d.add_parts(prod, err);
        self.count += 1;
    }

    pub fn add(&mut self, other: &InnerProducts) {
        assert_eq!(self.dim, other.dim, "inner product dimensions differ");
        self.b.iter_mut().zip(&other.b).for_each(|(a, b)| *a = a.add(*b));
        self.c.iter_mut().zip(&other.c).for_each(|(a, b)| *a = a.add(*b));
        self.d = self.d.add(other.d);
        self.count += other.count;
    }
}

/// `ip` plus the rank-one updates of `rows`, accumulated in order.
pub fn accumulate(ip: &InnerProducts, rows: &[InstanceRow<'_>]) -> Result<InnerProducts> {
    let mut out = ip.clone();
    for r in rows {
        if r.predictors.len() + 1 != ip.dim {
            return Err(SetarError::DimensionMismatch { expected: ip.dim - 1, found: r.predictors.len() });
        }
        out.add_row(r.predictors, r.target);
    }
    Ok(out)
}

/// Statistics of `parent` minus those of `left`: the right child of a split.
pub fn right_complement(parent: &InnerProducts, left: &InnerProducts) -> InnerProducts {
    assert_eq!(parent.dim, left.dim, "inner product dimensions differ");
    assert!(left.count <= parent.count, "left child larger than parent");
    InnerProducts {
        dim: parent.dim,
        b: parent.b.iter().zip(&left.b).map(|(p, l)| p.sub(*l)).collect(),
        c: parent.c.iter().zip(&left.c).map(|(p, l)| p.sub(*l)).collect(),
        d: parent.d.sub(left.d),
        count: parent.count - left.count,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    /// Intercept first, then one coefficient per predictor column.
    pub beta: Vec<f64>,
    pub sse: f64,
    pub n_obs: usize,
    pub n_params: usize,
    /// Number of columns kept by the factorization; `rank < n_params` means
    /// some coefficients were pinned to zero.
    pub rank: usize,
}

impl LinearFit {
    pub fn is_full_rank(&self) -> bool {
        self.rank == self.n_params
    }

    pub fn intercept(&self) -> f64 {
        self.beta[0]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.beta[1..]
    }

    #[inline]
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.beta[0] + self.beta[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }
}

/// Solve the normal equations held in `ip`.
///
/// Columns are factorized in order (intercept first). A column whose Cholesky
/// pivot falls below [`RANK_TOL`] relative to its diagonal is dropped and its
/// coefficient fixed at zero, so the solution uses the earliest independent
/// columns. The SSE is the residual quadratic form in double-double
/// arithmetic, clamped at zero.
pub fn fit_from_inner_products(ip: &InnerProducts) -> Result<LinearFit> {
    if ip.count == 0 {
        return Err(SetarError::SingularSystem);
    }
    let p = ip.dim;
    let mut l = vec![0.0; p * p];
    let mut active = vec![false; p];
    for k in 0..p {
        let bkk = ip.b(k, k);
        let pivot = bkk - (0..k).map(|j| l[k * p + j] * l[k * p + j]).sum::<f64>();
        if bkk <= 0.0 || !(pivot > RANK_TOL * bkk) {
            continue;
        }
        let lkk = pivot.sqrt();
        l[k * p + k] = lkk;
        active[k] = true;
        for i in k + 1..p {
            let v = ip.b(i, k) - (0..k).map(|j| l[i * p + j] * l[k * p + j]).sum::<f64>();
            l[i * p + k] = v / lkk;
        }
    }

    let mut z = vec![0.0; p];
    for k in 0..p {
        if active[k] {
            let v = ip.c[k].value() - (0..k).map(|j| l[k * p + j] * z[j]).sum::<f64>();
            z[k] = v / l[k * p + k];
        }
    }
    let mut beta = vec![0.0; p];
    for k in (0..p).rev() {
        if active[k] {
            let v = z[k] - (k + 1..p).map(|i| l[i * p + k] * beta[i]).sum::<f64>();
            beta[k] = v / l[k * p + k];
        }
    }
    let mut sse = ip.d;
    for i in (0..p).filter(|&i| active[i]) {
        let mut t = ip.c[i].mul_f64(-2.0);
        for j in (0..p).filter(|&j| active[j]) {
            t = t.add(ip.b_dd(i, j).mul_f64(beta[j]));
        }
        sse = sse.add(t.mul_f64(beta[i]));
    }
    let sse = sse.value().max(0.0);
    Ok(LinearFit { beta, sse, n_obs: ip.count, n_params: p, rank: active.iter().filter(|a| **a).count() })
}

/// Least-squares fit on explicit rows.
pub fn fit_least_squares(rows: &[InstanceRow<'_>]) -> Result<LinearFit> {
    let first = rows.first().ok_or(SetarError::EmptyTrainingSet)?;
    let ip = accumulate(&InnerProducts::zero(first.predictors.len()), rows)?;
    fit_from_inner_products(&ip)
}

/// Least-squares fit on a subset of the rows of `matrix`.
pub fn fit_rows(matrix: &EmbeddedMatrix, rows: &[usize]) -> Result<LinearFit> {
    if rows.is_empty() {
        return Err(SetarError::EmptyTrainingSet);
    }
    fit_from_inner_products(&InnerProducts::from_matrix(matrix, rows))
}
