//! Independent reference implementations used by the acceptance suite.
//!
//! The fluctuation oracle below is written from the definition with plain
//! loops and a Vandermonde least-squares fit per segment — deliberately a
//! different route from the library's shared thin-QR path.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use scalereg_core::TimeSeries;

pub fn gaussian_series(label: &str, len: usize, sd: f64, seed: u64) -> TimeSeries {
    let normal = Normal::new(0.0, sd).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    TimeSeries::new(label, (0..len).map(|_| normal.sample(&mut rng)).collect()).unwrap()
}

/// Cumulative sum of deviations from the mean.
pub fn oracle_profile(values: &[f64]) -> Vec<f64> {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let mut acc = 0.0;
    values
        .iter()
        .map(|v| {
            acc += v - mean;
            acc
        })
        .collect()
}

/// Least-squares polynomial fit residuals of one segment, via an explicit
/// Vandermonde system solved by SVD.
fn segment_residuals(segment: &[f64], order: usize) -> Vec<f64> {
    let n = segment.len();
    let design = DMatrix::from_fn(n, order + 1, |i, j| ((i + 1) as f64).powi(j as i32));
    let rhs = DVector::from_column_slice(segment);
    let coef = design
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .expect("SVD solve");
    let fitted = design * coef;
    (0..n).map(|i| segment[i] - fitted[i]).collect()
}

/// F²_{ab}(n) straight from the definition: 2·floor(N/n) segments taken
/// forward then backward, order-`order` detrending, mean residual product.
pub fn oracle_fluctuation(
    profile_a: &[f64],
    profile_b: &[f64],
    scale: usize,
    order: usize,
) -> f64 {
    let len = profile_a.len();
    let forward = len / scale;
    let mut total = 0.0;
    for j in 1..=2 * forward {
        let start = if j <= forward {
            (j - 1) * scale
        } else {
            len - (j - forward) * scale
        };
        let ra = segment_residuals(&profile_a[start..start + scale], order);
        let rb = segment_residuals(&profile_b[start..start + scale], order);
        let seg: f64 = ra.iter().zip(&rb).map(|(a, b)| a * b).sum();
        total += seg / scale as f64;
    }
    total / (2 * forward) as f64
}
