//! Core series types: raw series, profiles, and the scale grid shared by
//! every scale-dependent quantity in the toolkit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniformly sampled scalar sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    label: String,
    values: Vec<f64>,
}

impl TimeSeries {
    /// Builds a series, rejecting empty input and non-finite values.
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            label: label.into(),
            values,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }

    /// Returns the mean-centered copy of this series.
    pub fn centered(&self) -> TimeSeries {
        let m = self.mean();
        TimeSeries {
            label: self.label.clone(),
            values: self.values.iter().map(|v| v - m).collect(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> TimeSeries {
        self.label = label.into();
        self
    }
}

/// Arithmetic mean of a non-empty slice.
pub fn mean(values: &[f64]) -> f64 {
    debug_assert!(!values.is_empty());
    values.iter().sum::<f64>() / values.len() as f64
}

/// Cumulative sum of the mean-centered series; the object that gets
/// segmented and detrended.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    values: Vec<f64>,
}

impl Profile {
    /// Raw profile constructor for callers that already hold cumulative
    /// values (tests, linear-combination constructions).
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn source_length(&self) -> usize {
        self.values.len()
    }
}

/// Builds the profile Z_t = sum_{i<=t} (z_i - <z>).
pub fn build_profile(series: &TimeSeries) -> Profile {
    let m = series.mean();
    let mut acc = 0.0;
    let values = series
        .values()
        .iter()
        .map(|z| {
            acc += z - m;
            acc
        })
        .collect();
    Profile { values }
}

/// The ordered set of window sizes n at which scale-dependent quantities
/// are evaluated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleGrid {
    scales: Vec<usize>,
}

/// Smallest admissible scale: a 2nd-order fit on n points needs n >= 4
/// for a nonzero residual degree of freedom.
pub const MIN_SCALE: usize = 4;

impl ScaleGrid {
    /// Log-equidistant integer grid between `n_min` and `n_max` with
    /// `count` targets. Targets are rounded to the nearest integer and
    /// deduplicated, so the result may be shorter than `count`; both
    /// endpoints are always present.
    pub fn logarithmic(n_min: usize, n_max: usize, count: usize) -> Result<Self> {
        if n_min < MIN_SCALE {
            return Err(Error::InvalidGrid {
                reason: format!("n_min = {n_min} below minimum {MIN_SCALE}"),
            });
        }
        if n_max <= n_min {
            return Err(Error::InvalidGrid {
                reason: format!("n_max = {n_max} must exceed n_min = {n_min}"),
            });
        }
        if count < 2 {
            return Err(Error::InvalidGrid {
                reason: format!("count = {count} must be at least 2"),
            });
        }
        let (lo, hi) = ((n_min as f64).ln(), (n_max as f64).ln());
        let mut scales: Vec<usize> = (0..count)
            .map(|i| {
                let t = i as f64 / (count - 1) as f64;
                (lo + t * (hi - lo)).exp().round() as usize
            })
            .collect();
        scales.dedup();
        debug_assert_eq!(scales.first(), Some(&n_min));
        debug_assert_eq!(scales.last(), Some(&n_max));
        Ok(Self { scales })
    }

    /// Default grid for a series of length `len`: 10..min(1000, len/4),
    /// 30 log-spaced points.
    pub fn default_for_len(len: usize) -> Result<Self> {
        let n_max = 1000.min(len / 4);
        Self::logarithmic(10, n_max, 30)
    }

    /// Grid from explicitly chosen scales; must be strictly increasing
    /// and start at >= 4.
    pub fn from_scales(scales: Vec<usize>) -> Result<Self> {
        if scales.is_empty() {
            return Err(Error::EmptyInput);
        }
        if scales[0] < MIN_SCALE {
            return Err(Error::ScaleTooSmall { scale: scales[0] });
        }
        if !scales.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidGrid {
                reason: "scales not strictly increasing".into(),
            });
        }
        Ok(Self { scales })
    }

    pub fn scales(&self) -> &[usize] {
        &self.scales
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    /// Checks every scale satisfies 4 <= n <= len/2.
    pub fn validate_for_len(&self, len: usize) -> Result<()> {
        for &n in &self.scales {
            if n < MIN_SCALE {
                return Err(Error::ScaleTooSmall { scale: n });
            }
            if 2 * n > len {
                return Err(Error::ScaleTooLarge { scale: n, len });
            }
        }
        Ok(())
    }
}
