//! Scale-dependent correlation coefficients: the DCCA cross-correlation
//! coefficient, its partial variant from the inverse correlation matrix,
//! and the classical partial correlation with its t-statistic.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fluctuation::FluctuationSet;
use crate::series::TimeSeries;

/// Condition-number cutoff above which a per-scale matrix is treated as
/// singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// ρ_DCCA(a, b, n) = F²_{ab}(n) / sqrt(F²_a(n) · F²_b(n)).
pub fn rho_dcca(fluct: &FluctuationSet, a: &str, b: &str) -> Result<Vec<f64>> {
    let va = fluct.variance_curve(a)?;
    let vb = fluct.variance_curve(b)?;
    let cab = fluct.covariance_curve(a, b)?;
    let scales = fluct.grid().scales();
    (0..scales.len())
        .map(|i| {
            if va[i] <= 0.0 || vb[i] <= 0.0 {
                return Err(Error::DegenerateAtScale { scale: scales[i] });
            }
            Ok(cab[i] / (va[i] * vb[i]).sqrt())
        })
        .collect()
}

/// Per-scale symmetric matrix of ρ_DCCA values with unit diagonal.
#[derive(Debug, Clone)]
pub struct DccaMatrix {
    labels: Vec<String>,
    scales: Vec<usize>,
    /// One symmetric matrix per scale.
    matrices: Vec<DMatrix<f64>>,
}

impl DccaMatrix {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn scales(&self) -> &[usize] {
        &self.scales
    }

    pub fn matrix_at(&self, scale_index: usize) -> &DMatrix<f64> {
        &self.matrices[scale_index]
    }

    fn label_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Assembles test matrices directly from per-scale correlation values;
    /// `entries[s]` is the full row-major matrix at scale index s.
    pub fn from_raw(labels: Vec<String>, scales: Vec<usize>, entries: Vec<DMatrix<f64>>) -> Self {
        Self {
            labels,
            scales,
            matrices: entries,
        }
    }
}

/// Builds the per-scale ρ_DCCA matrix for every variable pair.
pub fn dcca_matrix(fluct: &FluctuationSet) -> Result<DccaMatrix> {
    let v = fluct.variable_count();
    if v < 2 {
        return Err(Error::InvalidParameter(
            "dcca_matrix needs at least 2 variables".into(),
        ));
    }
    let scales = fluct.grid().scales().to_vec();
    let mut matrices = Vec::with_capacity(scales.len());
    for (si, &n) in scales.iter().enumerate() {
        let mut m = DMatrix::identity(v, v);
        for a in 0..v {
            if fluct.variance_by_index(a)[si] <= 0.0 {
                return Err(Error::DegenerateAtScale { scale: n });
            }
        }
        for a in 0..v {
            for b in (a + 1)..v {
                let va = fluct.variance_by_index(a)[si];
                let vb = fluct.variance_by_index(b)[si];
                let cab = fluct.covariance_by_index(a, b)[si];
                let rho = cab / (va * vb).sqrt();
                m[(a, b)] = rho;
                m[(b, a)] = rho;
            }
        }
        matrices.push(m);
    }
    Ok(DccaMatrix {
        labels: fluct.labels().to_vec(),
        scales,
        matrices,
    })
}

/// ρ_PDCCA(a, b, n) = -C_ab / sqrt(C_aa · C_bb) where C is the inverse of
/// the per-scale ρ_DCCA matrix.
pub fn rho_pdcca(matrix: &DccaMatrix, a: &str, b: &str) -> Result<Vec<f64>> {
    let ia = matrix.label_index(a)?;
    let ib = matrix.label_index(b)?;
    if ia == ib {
        return Err(Error::InvalidParameter(
            "rho_pdcca requires two distinct variables".into(),
        ));
    }
    matrix
        .scales
        .iter()
        .zip(&matrix.matrices)
        .map(|(&n, m)| {
            let inv = invert_checked(m, n)?;
            Ok(-inv[(ia, ib)] / (inv[(ia, ia)] * inv[(ib, ib)]).sqrt())
        })
        .collect()
}

/// Inverse with a 1-norm condition estimate; rejects beyond the limit.
fn invert_checked(m: &DMatrix<f64>, scale: usize) -> Result<DMatrix<f64>> {
    let norm = one_norm(m);
    let inv = m
        .clone()
        .try_inverse()
        .ok_or(Error::SingularAtScale { scale })?;
    if norm * one_norm(&inv) > CONDITION_LIMIT {
        return Err(Error::SingularAtScale { scale });
    }
    Ok(inv)
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols())
        .map(|c| m.column(c).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Pearson correlation via a two-pass mean/covariance computation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::Collinear);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Classical partial correlation r_{12,3} of x and y controlling for a
/// third series, together with t = r·sqrt((N-3)/(1-r²)).
pub fn partial_corr_classic(
    x: &TimeSeries,
    y: &TimeSeries,
    control: &TimeSeries,
) -> Result<(f64, f64)> {
    let n = x.len();
    if y.len() != n || control.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: y.len().max(control.len()),
        });
    }
    if n < 4 {
        return Err(Error::InvalidParameter(
            "partial correlation needs N >= 4".into(),
        ));
    }
    let r12 = pearson(x.values(), y.values())?;
    let r13 = pearson(x.values(), control.values())?;
    let r23 = pearson(y.values(), control.values())?;
    for r in [r12, r13, r23] {
        if r.abs() >= 1.0 {
            return Err(Error::Collinear);
        }
    }
    let r12_3 = (r12 - r13 * r23) / ((1.0 - r13 * r13) * (1.0 - r23 * r23)).sqrt();
    if r12_3.abs() >= 1.0 {
        return Err(Error::Collinear);
    }
    let t = r12_3 * ((n as f64 - 3.0) / (1.0 - r12_3 * r12_3)).sqrt();
    Ok((r12_3, t))
}

/// Closed-form 3-variable partial correlation from pairwise values; kept
/// as an independent route against the matrix-inverse path.
pub fn partial_from_pairwise(r12: f64, r13: f64, r23: f64) -> f64 {
    (r12 - r13 * r23) / ((1.0 - r13 * r13) * (1.0 - r23 * r23)).sqrt()
}
