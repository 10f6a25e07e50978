//! Split acceptance: the general linear F-test between the parent fit and the
//! two child fits, the relative error-reduction rule, and the per-level
//! significance schedule.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SetarError};
use crate::fdist::f_upper_tail;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StoppingCriterion {
    LinTest,
    ErrorRed,
    Both,
}

impl StoppingCriterion {
    pub fn as_str(self) -> &'static str {
        match self {
            StoppingCriterion::LinTest => "lin-test",
            StoppingCriterion::ErrorRed => "error-red",
            StoppingCriterion::Both => "both",
        }
    }
}

impl std::str::FromStr for StoppingCriterion {
    type Err = SetarError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lin-test" | "lin_test" => Ok(StoppingCriterion::LinTest),
            "error-red" | "error_red" => Ok(StoppingCriterion::ErrorRed),
            "both" => Ok(StoppingCriterion::Both),
            other => Err(SetarError::InvalidConfig(format!("unknown stopping criterion `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingConfig {
    pub criterion: StoppingCriterion,
    pub alpha0: f64,
    pub significance_divider: f64,
    pub error_threshold: f64,
    pub max_depth: usize,
}

impl Default for StoppingConfig {
    fn default() -> Self {
        Self {
            criterion: StoppingCriterion::Both,
            alpha0: 0.05,
            significance_divider: 2.0,
            error_threshold: 0.03,
            max_depth: 1000,
        }
    }
}

impl StoppingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 > 0.0 && self.alpha0 < 1.0) {
            return Err(SetarError::InvalidConfig(format!("alpha0 must lie in (0, 1), got {}", self.alpha0)));
        }
        if !(self.significance_divider > 1.0) || !self.significance_divider.is_finite() {
            return Err(SetarError::InvalidConfig(format!(
                "significance divider must exceed 1, got {}",
                self.significance_divider
            )));
        }
        if !(self.error_threshold >= 0.0) || !self.error_threshold.is_finite() {
            return Err(SetarError::InvalidConfig(format!(
                "error threshold must be non-negative, got {}",
                self.error_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FTestResult {
    pub f_stat: f64,
    pub df1: usize,
    pub df2: usize,
    pub p_value: f64,
}

/// F-test of the parent model against the two child models.
///
/// `n` is the node's row count and `n_predictors` the number of predictor
/// columns `L`; the statistic has `(L + 1, N - 2L - 2)` degrees of freedom.
/// The split passes when `p < alpha`.
pub fn check_linearity(parent_sse: f64, child_total_sse: f64, n: usize, n_predictors: usize, alpha: f64) -> Result<(bool, FTestResult)> {
    let df1 = n_predictors + 1;
    let df2 = n
        .checked_sub(2 * n_predictors + 2)
        .filter(|&d| d >= 1)
        .ok_or(SetarError::InsufficientDf { n, predictors: n_predictors })?;
    let child = child_total_sse.min(parent_sse).max(0.0);
    let gain = parent_sse - child;

    let (f_stat, p_value) = if child == 0.0 {
        if gain > 0.0 {
            (f64::INFINITY, 0.0)
        } else {
            (0.0, 1.0)
        }
    } else {
        let f = (gain / df1 as f64) / (child / df2 as f64);
        (f, f_upper_tail(f, df1, df2)?)
    };
    Ok((p_value < alpha, FTestResult { f_stat, df1, df2, p_value }))
}

/// `(parent - children) / parent >= threshold`; a zero-error parent never splits.
pub fn check_error_reduction(parent_sse: f64, child_total_sse: f64, error_threshold: f64) -> bool {
    if parent_sse <= 0.0 {
        return false;
    }
    (parent_sse - child_total_sse) / parent_sse >= error_threshold
}

/// Significance level used at tree level `depth` (root is level 0).
pub fn alpha_at_depth(alpha0: f64, divider: f64, depth: usize) -> f64 {
    alpha0 / divider.powi(depth as i32)
}

/// Dispatch on the configured criterion. Too few residual degrees of freedom
/// for the F-test reject the split.
pub fn is_good_split(
    parent_sse: f64,
    child_total_sse: f64,
    n: usize,
    n_predictors: usize,
    config: &StoppingConfig,
    depth: usize,
) -> Result<bool> {
    let linearity = || -> Result<bool> {
        let alpha = alpha_at_depth(config.alpha0, config.significance_divider, depth);
        match check_linearity(parent_sse, child_total_sse, n, n_predictors, alpha) {
            Ok((pass, _)) => Ok(pass),
            Err(SetarError::InsufficientDf { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    };
    let reduction = || check_error_reduction(parent_sse, child_total_sse, config.error_threshold);
    Ok(match config.criterion {
        StoppingCriterion::LinTest => linearity()?,
        StoppingCriterion::ErrorRed => reduction(),
        StoppingCriterion::Both => linearity()? && reduction(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn defaults() {
        let c = StoppingConfig::default();
        assert_eq!(c.criterion, StoppingCriterion::Both);
        assert_eq!((c.alpha0, c.significance_divider, c.error_threshold, c.max_depth), (0.05, 2.0, 0.03, 1000));
        c.validate().unwrap();
        assert!(StoppingConfig { alpha0: 1.0, ..c }.validate().is_err());
        assert!(StoppingConfig { significance_divider: 1.0, ..c }.validate().is_err());
        assert!(StoppingConfig { error_threshold: -0.1, ..c }.validate().is_err());
    }

    #[test]
    fn no_improvement_never_passes() {
        let (pass, r) = check_linearity(10.0, 10.0, 100, 4, 0.05).unwrap();
        assert!(!pass);
        assert_eq!(r.f_stat, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn halved_sse_is_significant() {
        let (pass, r) = check_linearity(100.0, 50.0, 100, 4, 0.05).unwrap();
        assert!(pass);
        assert_relative_eq!(r.f_stat, 18.0, max_relative = 1e-14);
        assert_eq!((r.df1, r.df2), (5, 90));
        // mpmath, 40 digits.
        assert_relative_eq!(r.p_value, 2.455844835691202668e-12, max_relative = 1e-10);
    }

    #[test]
    fn too_few_rows_for_the_test() {
        assert!(matches!(check_linearity(10.0, 5.0, 12, 5, 0.05), Err(SetarError::InsufficientDf { .. })));
        let cfg = StoppingConfig { criterion: StoppingCriterion::LinTest, ..Default::default() };
        assert!(!is_good_split(10.0, 5.0, 12, 5, &cfg, 0).unwrap());
    }

    #[test]
    fn perfect_children() {
        let (pass, r) = check_linearity(3.0, 0.0, 50, 2, 0.05).unwrap();
        assert!(pass);
        assert_eq!(r.p_value, 0.0);
        // Numerical excess in the children is clamped to the parent.
        let (pass, r) = check_linearity(3.0, 3.0 + 1e-15, 50, 2, 0.05).unwrap();
        assert!(!pass);
        assert_eq!(r.f_stat, 0.0);
    }

    #[test]
    fn error_reduction_rule() {
        assert!(check_error_reduction(100.0, 96.0, 0.03));
        assert!(!check_error_reduction(100.0, 98.0, 0.03));
        assert!(!check_error_reduction(0.0, 0.0, 0.03));
    }

    #[test]
    fn alpha_schedule() {
        assert_eq!(alpha_at_depth(0.05, 2.0, 0), 0.05);
        assert_eq!(alpha_at_depth(0.05, 2.0, 2), 0.0125);
        for d in 0..30 {
            assert!(alpha_at_depth(0.05, 3.0, d + 1) < alpha_at_depth(0.05, 3.0, d));
        }
    }

    #[test]
    fn criterion_dispatch() {
        let base = StoppingConfig::default();
        // F-test passes comfortably, but only a 2% reduction.
        let (parent, child, n, l) = (100.0, 98.0, 100_000, 2);
        let (pass, _) = check_linearity(parent, child, n, l, 0.05).unwrap();
        assert!(pass);
        assert!(!is_good_split(parent, child, n, l, &base, 0).unwrap());
        let lin = StoppingConfig { criterion: StoppingCriterion::LinTest, ..base };
        assert!(is_good_split(parent, child, n, l, &lin, 0).unwrap());

        // 10% reduction that the F-test cannot support on so few rows.
        let (parent, child, n, l) = (100.0, 90.0, 20, 3);
        let (pass, r) = check_linearity(parent, child, n, l, 0.05).unwrap();
        assert!(!pass && r.p_value > 0.5);
        let err = StoppingConfig { criterion: StoppingCriterion::ErrorRed, ..base };
        assert!(is_good_split(parent, child, n, l, &err, 0).unwrap());
        assert!(!is_good_split(parent, child, n, l, &base, 0).unwrap());
    }

    #[test]
    fn criterion_parsing() {
        assert_eq!("lin-test".parse::<StoppingCriterion>().unwrap(), StoppingCriterion::LinTest);
        assert_eq!("error-red".parse::<StoppingCriterion>().unwrap(), StoppingCriterion::ErrorRed);
        assert!("aic".parse::<StoppingCriterion>().is_err());
    }
}
