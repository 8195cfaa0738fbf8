//! Bivariate regression engines: the classical OLS fit with its variance
//! estimators and evaluation indices, and the scale-dependent DFA-based
//! variant built on detrended fluctuation functions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fluctuation::{dfa_variance_at_scale, FluctuationSet};
use crate::series::{build_profile, mean, ScaleGrid, TimeSeries};

/// Relative floor below which the normal-equation denominator is treated
/// as collinear/degenerate.
const DENOMINATOR_FLOOR: f64 = 1e-12;

/// Classical OLS fit of Y = β₀ + β₁X₁ + β₂X₂ + ε.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub var_beta1: f64,
    pub var_beta2: f64,
    pub residuals: TimeSeries,
    pub r_squared: f64,
    /// Unit-free beta coefficients (β*₁, β*₂).
    pub beta_star: (f64, f64),
    /// Average elasticity coefficients (η₁, η₂); absent when ⟨Y⟩ = 0.
    pub elasticity: Option<(f64, f64)>,
}

pub fn ols_fit(y: &TimeSeries, x1: &TimeSeries, x2: &TimeSeries) -> Result<OlsFit> {
    let n = y.len();
    if x1.len() != n || x2.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: x1.len().max(x2.len()),
        });
    }
    if n < 4 {
        return Err(Error::InvalidParameter("OLS needs N >= 4".into()));
    }
    let (my, m1, m2) = (y.mean(), x1.mean(), x2.mean());
    let mut s11 = 0.0;
    let mut s22 = 0.0;
    let mut s12 = 0.0;
    let mut s1y = 0.0;
    let mut s2y = 0.0;
    let mut syy = 0.0;
    for t in 0..n {
        let d1 = x1.values()[t] - m1;
        let d2 = x2.values()[t] - m2;
        let dy = y.values()[t] - my;
        s11 += d1 * d1;
        s22 += d2 * d2;
        s12 += d1 * d2;
        s1y += d1 * dy;
        s2y += d2 * dy;
        syy += dy * dy;
    }
    let den = s11 * s22 - s12 * s12;
    if den <= DENOMINATOR_FLOOR * s11 * s22 || syy <= 0.0 {
        return Err(Error::Collinear);
    }
    let beta1 = (s1y * s22 - s2y * s12) / den;
    let beta2 = (s2y * s11 - s1y * s12) / den;
    let beta0 = my - beta1 * m1 - beta2 * m2;
    let residuals = residual_series(y, x1, x2, beta1, beta2)?;
    let sse: f64 = residuals.values().iter().map(|e| e * e).sum();
    let sigma2 = sse / (n as f64 - 3.0);
    Ok(OlsFit {
        beta0,
        beta1,
        beta2,
        var_beta1: s22 * sigma2 / den,
        var_beta2: s11 * sigma2 / den,
        r_squared: 1.0 - sse / syy,
        beta_star: (beta1 * (s11 / syy).sqrt(), beta2 * (s22 / syy).sqrt()),
        elasticity: if my == 0.0 {
            None
        } else {
            Some((beta1 * m1 / my, beta2 * m2 / my))
        },
        residuals,
    })
}

/// Zero-mean residual series Y - β₁X₁ - β₂X₂ - ⟨·⟩ for a given
/// coefficient pair.
pub fn residual_series(
    y: &TimeSeries,
    x1: &TimeSeries,
    x2: &TimeSeries,
    beta1: f64,
    beta2: f64,
) -> Result<TimeSeries> {
    let n = y.len();
    if x1.len() != n || x2.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: x1.len().max(x2.len()),
        });
    }
    let raw: Vec<f64> = (0..n)
        .map(|t| y.values()[t] - beta1 * x1.values()[t] - beta2 * x2.values()[t])
        .collect();
    let m = mean(&raw);
    TimeSeries::new("residuals", raw.iter().map(|v| v - m).collect())
}

/// One retained (nondegenerate) scale of a DFA regression fit.
#[derive(Debug, Clone, Serialize)]
pub struct DfaScaleRow {
    pub scale: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub var_beta1: f64,
    pub var_beta2: f64,
    /// F²_ε(n): residual fluctuation at this scale.
    pub residual_fluct: f64,
    /// Unclamped; may go negative when the scale-n coefficients explain
    /// less than the null at that scale.
    pub r_squared_dfa: f64,
    pub beta_star: (f64, f64),
    pub elasticity: Option<(f64, f64)>,
    /// ⟨Y⟩ - β̂₁(n)⟨X₁⟩ - β̂₂(n)⟨X₂⟩; derived, not estimated by the DFA
    /// path itself.
    pub implied_intercept: f64,
    /// 95% interval β̂ ± 1.96·√var.
    pub ci_beta1: (f64, f64),
    pub ci_beta2: (f64, f64),
}

/// Scale-dependent bivariate regression fit.
#[derive(Debug, Clone)]
pub struct DfaRegressionFit {
    requested: ScaleGrid,
    rows: Vec<DfaScaleRow>,
    warnings: Vec<String>,
    series_len: usize,
}

impl DfaRegressionFit {
    pub fn requested_grid(&self) -> &ScaleGrid {
        &self.requested
    }

    /// Retained scales, in increasing order; degenerate scales are absent.
    pub fn scales(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.scale).collect()
    }

    pub fn rows(&self) -> &[DfaScaleRow] {
        &self.rows
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn series_len(&self) -> usize {
        self.series_len
    }

    pub fn beta1_curve(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.beta1).collect()
    }

    pub fn beta2_curve(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.beta2).collect()
    }
}

/// Scale-dependent estimators from detrended variances/covariances, with
/// the residual fluctuation fed back through the DFA pipeline at each
/// scale. Degenerate scales are skipped with a warning; the fit fails only
/// if every scale is degenerate.
pub fn dfa_regression(
    y: &TimeSeries,
    x1: &TimeSeries,
    x2: &TimeSeries,
    grid: &ScaleGrid,
    order: usize,
) -> Result<DfaRegressionFit> {
    let n = y.len();
    if x1.len() != n || x2.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: x1.len().max(x2.len()),
        });
    }
    grid.validate_for_len(n)?;
    // index order: 0 = Y, 1 = X1, 2 = X2
    let set = FluctuationSet::compute(
        &[
            y.clone().with_label("__y"),
            x1.clone().with_label("__x1"),
            x2.clone().with_label("__x2"),
        ],
        grid,
        order,
    )?;
    let (my, m1, m2) = (y.mean(), x1.mean(), x2.mean());
    let dof = n as f64 - 3.0;
    let mut rows = Vec::with_capacity(grid.len());
    let mut warnings = Vec::new();
    for (si, &scale) in grid.scales().iter().enumerate() {
        let fy = set.variance_by_index(0)[si];
        let f1 = set.variance_by_index(1)[si];
        let f2 = set.variance_by_index(2)[si];
        let f1y = set.covariance_by_index(0, 1)[si];
        let f2y = set.covariance_by_index(0, 2)[si];
        let f12 = set.covariance_by_index(1, 2)[si];
        let den = f1 * f2 - f12 * f12;
        if den.abs() <= DENOMINATOR_FLOOR * f1 * f2 || fy <= 0.0 {
            warnings.push(format!("scale {scale}: degenerate fluctuation denominator, skipped"));
            continue;
        }
        let beta1 = (f1y * f2 - f2y * f12) / den;
        let beta2 = (f2y * f1 - f1y * f12) / den;
        let resid = residual_series(y, x1, x2, beta1, beta2)?;
        let f_eps = dfa_variance_at_scale(&build_profile(&resid), scale, order)?;
        let var_beta1 = f2 * f_eps / (dof * den);
        let var_beta2 = f1 * f_eps / (dof * den);
        rows.push(DfaScaleRow {
            scale,
            beta1,
            beta2,
            var_beta1,
            var_beta2,
            residual_fluct: f_eps,
            r_squared_dfa: 1.0 - f_eps / fy,
            beta_star: (beta1 * (f1 / fy).sqrt(), beta2 * (f2 / fy).sqrt()),
            elasticity: if my == 0.0 {
                None
            } else {
                Some((beta1 * m1 / my, beta2 * m2 / my))
            },
            implied_intercept: my - beta1 * m1 - beta2 * m2,
            ci_beta1: (
                beta1 - 1.96 * var_beta1.sqrt(),
                beta1 + 1.96 * var_beta1.sqrt(),
            ),
            ci_beta2: (
                beta2 - 1.96 * var_beta2.sqrt(),
                beta2 + 1.96 * var_beta2.sqrt(),
            ),
        });
    }
    if rows.is_empty() {
        return Err(Error::AllScalesDegenerate);
    }
    Ok(DfaRegressionFit {
        requested: grid.clone(),
        rows,
        warnings,
        series_len: n,
    })
}
