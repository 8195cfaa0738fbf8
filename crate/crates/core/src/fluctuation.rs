//! DFA/DCCA engine: bidirectional segmentation, per-segment polynomial
//! detrending, and the scale-dependent variance F²_Z(n) and covariance
//! F²_{Z1Z2}(n) functions.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::series::{Profile, ScaleGrid, TimeSeries, build_profile, MIN_SCALE};

/// Highest supported detrending order; monomial bases above this are too
/// ill-conditioned at large n even after centering.
pub const MAX_DETREND_ORDER: usize = 4;

/// Bidirectional non-overlapping segmentation of a profile of length N at
/// scale n: floor(N/n) forward segments plus the same count anchored at
/// the opposite end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentLayout {
    series_len: usize,
    scale: usize,
    forward: usize,
}

impl SegmentLayout {
    pub fn new(series_len: usize, scale: usize) -> Result<Self> {
        if scale < MIN_SCALE {
            return Err(Error::ScaleTooSmall { scale });
        }
        if 2 * scale > series_len {
            return Err(Error::ScaleTooLarge {
                scale,
                len: series_len,
            });
        }
        Ok(Self {
            series_len,
            scale,
            forward: series_len / scale,
        })
    }

    pub fn scale(&self) -> usize {
        self.scale
    }

    /// N_n = floor(N/n).
    pub fn forward_count(&self) -> usize {
        self.forward
    }

    pub fn total_segments(&self) -> usize {
        2 * self.forward
    }

    /// 0-based start index of segment `j` (0 <= j < 2·N_n). The first N_n
    /// segments tile from the left end, the rest from the right end.
    pub fn segment_start(&self, j: usize) -> usize {
        debug_assert!(j < self.total_segments());
        if j < self.forward {
            j * self.scale
        } else {
            self.series_len - (j - self.forward + 1) * self.scale
        }
    }

    /// Global 0-based profile index of offset `k` within segment `j`.
    pub fn index(&self, j: usize, k: usize) -> usize {
        debug_assert!(k < self.scale);
        self.segment_start(j) + k
    }
}

/// Least-squares polynomial detrender for segments of a fixed length.
///
/// The design matrix uses centered, scaled offsets so the basis stays
/// well-conditioned at n up to 1000; its thin QR factor is computed once
/// and reused for every segment of that length.
#[derive(Debug, Clone)]
pub struct Detrender {
    len: usize,
    order: usize,
    q: DMatrix<f64>,
}

impl Detrender {
    pub fn new(len: usize, order: usize) -> Result<Self> {
        if order > MAX_DETREND_ORDER {
            return Err(Error::UnsupportedOrder { order });
        }
        if len <= order + 1 {
            return Err(Error::DegenerateFit { len, order });
        }
        let half = (len as f64 - 1.0) / 2.0;
        let scale = half.max(1.0);
        let design = DMatrix::from_fn(len, order + 1, |i, p| {
            ((i as f64 - half) / scale).powi(p as i32)
        });
        let q = design.qr().q();
        Ok(Self { len, order, q })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Writes `segment - P(segment)` into `out`, where P projects onto the
    /// polynomial space.
    pub fn residuals_into(&self, segment: &[f64], out: &mut [f64]) {
        debug_assert_eq!(segment.len(), self.len);
        debug_assert_eq!(out.len(), self.len);
        let m = self.order + 1;
        let mut coeffs = [0.0f64; MAX_DETREND_ORDER + 1];
        for c in 0..m {
            let col = self.q.column(c);
            let mut dot = 0.0;
            for i in 0..self.len {
                dot += col[i] * segment[i];
            }
            coeffs[c] = dot;
        }
        for i in 0..self.len {
            let mut fit = 0.0;
            for c in 0..m {
                fit += self.q[(i, c)] * coeffs[c];
            }
            out[i] = segment[i] - fit;
        }
    }

    pub fn residuals(&self, segment: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        self.residuals_into(segment, &mut out);
        out
    }
}

/// One-off detrend of a single segment.
pub fn detrend_segment(segment: &[f64], order: usize) -> Result<Vec<f64>> {
    let det = Detrender::new(segment.len(), order)?;
    Ok(det.residuals(segment))
}

/// Residuals of every segment of `profile` at the layout's scale,
/// concatenated in segment order (length `total_segments * n`).
fn segment_residuals(profile: &Profile, layout: &SegmentLayout, det: &Detrender) -> Vec<f64> {
    let n = layout.scale();
    let values = profile.values();
    let mut out = vec![0.0; layout.total_segments() * n];
    for j in 0..layout.total_segments() {
        let start = layout.segment_start(j);
        det.residuals_into(&values[start..start + n], &mut out[j * n..(j + 1) * n]);
    }
    out
}

/// F² from one or two residual buffers: the segment-averaged mean residual
/// product. Segments are summed in fixed index order.
fn fluctuation_from_residuals(ra: &[f64], rb: &[f64], n: usize) -> f64 {
    debug_assert_eq!(ra.len(), rb.len());
    let segments = ra.len() / n;
    let mut total = 0.0;
    for j in 0..segments {
        let mut seg = 0.0;
        for k in 0..n {
            seg += ra[j * n + k] * rb[j * n + k];
        }
        total += seg / n as f64;
    }
    total / segments as f64
}

/// DFA scale-dependent variance F²_Z(n) over the grid.
pub fn dfa_variance(profile: &Profile, grid: &ScaleGrid, order: usize) -> Result<Vec<f64>> {
    grid.validate_for_len(profile.len())?;
    grid.scales()
        .iter()
        .map(|&n| dfa_variance_at_scale(profile, n, order))
        .collect()
}

/// F²_Z at a single scale.
pub fn dfa_variance_at_scale(profile: &Profile, scale: usize, order: usize) -> Result<f64> {
    let layout = SegmentLayout::new(profile.len(), scale)?;
    let det = Detrender::new(scale, order)?;
    let res = segment_residuals(profile, &layout, &det);
    Ok(fluctuation_from_residuals(&res, &res, scale))
}

/// DCCA scale-dependent covariance F²_{ab}(n) over the grid. Sign-carrying.
pub fn dcca_covariance(
    profile_a: &Profile,
    profile_b: &Profile,
    grid: &ScaleGrid,
    order: usize,
) -> Result<Vec<f64>> {
    if profile_a.len() != profile_b.len() {
        return Err(Error::LengthMismatch {
            left: profile_a.len(),
            right: profile_b.len(),
        });
    }
    grid.validate_for_len(profile_a.len())?;
    grid.scales()
        .iter()
        .map(|&n| {
            let layout = SegmentLayout::new(profile_a.len(), n)?;
            let det = Detrender::new(n, order)?;
            let ra = segment_residuals(profile_a, &layout, &det);
            let rb = segment_residuals(profile_b, &layout, &det);
            Ok(fluctuation_from_residuals(&ra, &rb, n))
        })
        .collect()
}

/// Per-scale DFA variances and DCCA covariances for a set of variables.
#[derive(Debug, Clone)]
pub struct FluctuationSet {
    grid: ScaleGrid,
    labels: Vec<String>,
    detrend_order: usize,
    /// variance[v][s] = F²_{Z_v}(n_s)
    variance: Vec<Vec<f64>>,
    /// covariance[pair][s] with pairs (i, j), i < j, in row-major order
    covariance: Vec<Vec<f64>>,
}

impl FluctuationSet {
    /// Computes all variances and unordered-pair covariances in a single
    /// pass: each segment's residuals are detrended once per variable and
    /// reused for every pair.
    pub fn compute(series: &[TimeSeries], grid: &ScaleGrid, order: usize) -> Result<Self> {
        let Some(first) = series.first() else {
            return Err(Error::EmptyInput);
        };
        let len = first.len();
        for s in series {
            if s.len() != len {
                return Err(Error::LengthMismatch {
                    left: len,
                    right: s.len(),
                });
            }
        }
        grid.validate_for_len(len)?;
        let profiles: Vec<Profile> = series.iter().map(build_profile).collect();
        Self::compute_from_profiles(
            &profiles,
            series.iter().map(|s| s.label().to_string()).collect(),
            grid,
            order,
        )
    }

    fn compute_from_profiles(
        profiles: &[Profile],
        labels: Vec<String>,
        grid: &ScaleGrid,
        order: usize,
    ) -> Result<Self> {
        let v = profiles.len();
        let s = grid.len();
        let mut variance = vec![vec![0.0; s]; v];
        let mut covariance = vec![vec![0.0; s]; v * (v - 1) / 2];
        for (si, &n) in grid.scales().iter().enumerate() {
            let layout = SegmentLayout::new(profiles[0].len(), n)?;
            let det = Detrender::new(n, order)?;
            let residuals: Vec<Vec<f64>> = profiles
                .iter()
                .map(|p| segment_residuals(p, &layout, &det))
                .collect();
            for a in 0..v {
                variance[a][si] = fluctuation_from_residuals(&residuals[a], &residuals[a], n);
                for b in (a + 1)..v {
                    covariance[pair_index(a, b, v)][si] =
                        fluctuation_from_residuals(&residuals[a], &residuals[b], n);
                }
            }
        }
        Ok(Self {
            grid: grid.clone(),
            labels,
            detrend_order: order,
            variance,
            covariance,
        })
    }

    pub fn grid(&self) -> &ScaleGrid {
        &self.grid
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn detrend_order(&self) -> usize {
        self.detrend_order
    }

    pub fn variable_count(&self) -> usize {
        self.labels.len()
    }

    fn label_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// F²_Z(n) curve for one variable.
    pub fn variance_curve(&self, label: &str) -> Result<&[f64]> {
        Ok(&self.variance[self.label_index(label)?])
    }

    /// F²_{ab}(n) curve; symmetric in its arguments, and equal to the
    /// variance curve when a == b.
    pub fn covariance_curve(&self, a: &str, b: &str) -> Result<&[f64]> {
        let ia = self.label_index(a)?;
        let ib = self.label_index(b)?;
        if ia == ib {
            return Ok(&self.variance[ia]);
        }
        let (lo, hi) = if ia < ib { (ia, ib) } else { (ib, ia) };
        Ok(&self.covariance[pair_index(lo, hi, self.labels.len())])
    }

    pub fn variance_by_index(&self, v: usize) -> &[f64] {
        &self.variance[v]
    }

    pub fn covariance_by_index(&self, a: usize, b: usize) -> &[f64] {
        if a == b {
            return &self.variance[a];
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        &self.covariance[pair_index(lo, hi, self.labels.len())]
    }
}

/// Batches Eq-style variances and covariances over all variables; thin
/// wrapper kept for call-site symmetry with the standalone functions.
pub fn fluctuation_set(
    series: &[TimeSeries],
    grid: &ScaleGrid,
    order: usize,
) -> Result<FluctuationSet> {
    FluctuationSet::compute(series, grid, order)
}

/// Position of unordered pair (a, b), a < b, among all pairs of `v`
/// variables, in row-major order.
fn pair_index(a: usize, b: usize, v: usize) -> usize {
    debug_assert!(a < b && b < v);
    a * v - a * (a + 1) / 2 + (b - a - 1)
}
