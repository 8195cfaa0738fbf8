//! Synthetic series generators: ARFIMA(0,d,0) fractional noise, the
//! binomial multifractal cascade, and the noise-embedding contamination
//! used to bury the cascade's small values.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Default MA(infinity) truncation; the weight magnitude at lag 1000 is
/// negligible for |d| <= 0.45.
pub const DEFAULT_TRUNCATION: usize = 1000;

/// Cascade depth cap (series length 2^26).
pub const MAX_BMFS_DEPTH: usize = 26;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArfimaSpec {
    /// Fractional integration parameter, strictly inside (-0.5, 0.5).
    pub d: f64,
    pub length: usize,
    /// Max lag of the truncated MA expansion.
    pub truncation: usize,
    pub seed: u64,
}

impl ArfimaSpec {
    pub fn new(d: f64, length: usize, seed: u64) -> Result<Self> {
        Self::with_truncation(d, length, DEFAULT_TRUNCATION, seed)
    }

    pub fn with_truncation(d: f64, length: usize, truncation: usize, seed: u64) -> Result<Self> {
        if !(d > -0.5 && d < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "d = {d} outside (-0.5, 0.5)"
            )));
        }
        if length == 0 {
            return Err(Error::EmptyInput);
        }
        if truncation == 0 {
            return Err(Error::InvalidParameter("truncation must be >= 1".into()));
        }
        Ok(Self {
            d,
            length,
            truncation,
            seed,
        })
    }
}

/// MA weights a_0..a_M of the ARFIMA(0,d,0) expansion
/// a_n = Gamma(n+d) / [Gamma(d)·Gamma(n+1)], computed by the recurrence
/// a_n = a_{n-1}·(n-1+d)/n. Algebraically identical to the Gamma-ratio
/// form but immune to Gamma overflow at large n. For d > 0 the weights
/// decay like n^(d-1) and the output has Hurst exponent d + 1/2.
pub fn arfima_weights(d: f64, truncation: usize) -> Result<Vec<f64>> {
    if !(d > -0.5 && d < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "d = {d} outside (-0.5, 0.5)"
        )));
    }
    let mut weights = Vec::with_capacity(truncation + 1);
    weights.push(1.0);
    for n in 1..=truncation {
        let prev = weights[n - 1];
        weights.push(prev * (n as f64 - 1.0 + d) / n as f64);
    }
    Ok(weights)
}

/// X(t) = sum_{m=0..M} a_m(d)·xi(t-m) with i.i.d. standard Gaussian
/// innovations; the first M samples are burn-in and discarded so every
/// output uses a full window.
pub fn arfima_generate(spec: &ArfimaSpec) -> Result<TimeSeries> {
    let weights = arfima_weights(spec.d, spec.truncation)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let total = spec.length + spec.truncation;
    let noise: Vec<f64> = (0..total)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let values: Vec<f64> = (spec.truncation..total)
        .map(|t| {
            let mut acc = 0.0;
            for (m, w) in weights.iter().enumerate() {
                acc += w * noise[t - m];
            }
            acc
        })
        .collect();
    TimeSeries::new("arfima", values)
}

/// Contamination policy: values below `threshold` are replaced with fresh
/// N(0, noise_sd²) draws.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Contamination {
    pub threshold: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BmfsSpec {
    /// Cascade multiplier in (0, 0.5).
    pub p: f64,
    /// Depth; series length is 2^depth.
    pub depth: usize,
    pub contamination: Option<Contamination>,
}

impl BmfsSpec {
    pub fn new(p: f64, depth: usize) -> Result<Self> {
        if !(p > 0.0 && p < 0.5) {
            return Err(Error::InvalidParameter(format!("p = {p} outside (0, 0.5)")));
        }
        if depth == 0 {
            return Err(Error::InvalidParameter("depth must be >= 1".into()));
        }
        if depth > MAX_BMFS_DEPTH {
            return Err(Error::InvalidParameter(format!(
                "depth = {depth} exceeds cap {MAX_BMFS_DEPTH}"
            )));
        }
        Ok(Self {
            p,
            depth,
            contamination: None,
        })
    }

    pub fn with_contamination(mut self, c: Contamination) -> Self {
        self.contamination = Some(c);
        self
    }
}

/// Binomial multifractal series: value at 1-based index k is
/// p^(depth - bits(k-1)) · (1-p)^bits(k-1).
pub fn bmfs_generate(spec: &BmfsSpec) -> Result<TimeSeries> {
    let n = spec.depth;
    let len = 1usize << n;
    let values: Vec<f64> = (0..len)
        .map(|k| {
            let ones = (k as u64).count_ones() as i32;
            spec.p.powi(n as i32 - ones) * (1.0 - spec.p).powi(ones)
        })
        .collect();
    let series = TimeSeries::new("bmfs", values)?;
    match spec.contamination {
        Some(c) => Ok(embed_in_noise(&series, c.threshold, c.noise_sd, c.seed)?.0),
        None => Ok(series),
    }
}

/// Replaces values below `threshold` with fresh N(0, noise_sd²) draws;
/// values at or above the threshold pass through exactly. Returns the
/// series and the replacement count.
pub fn embed_in_noise(
    series: &TimeSeries,
    threshold: f64,
    noise_sd: f64,
    seed: u64,
) -> Result<(TimeSeries, usize)> {
    if threshold <= 0.0 || noise_sd <= 0.0 {
        return Err(Error::InvalidParameter(
            "threshold and noise_sd must be positive".into(),
        ));
    }
    let normal = Normal::new(0.0, noise_sd).expect("positive sd");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut replaced = 0;
    let values: Vec<f64> = series
        .values()
        .iter()
        .map(|&v| {
            if v < threshold {
                replaced += 1;
                normal.sample(&mut rng)
            } else {
                v
            }
        })
        .collect();
    Ok((TimeSeries::new(series.label(), values)?, replaced))
}

/// y_t = beta0 + beta1·x1_t + beta2·x2_t + e_t.
pub fn make_regression_dataset(
    x1: &TimeSeries,
    x2: &TimeSeries,
    betas: (f64, f64, f64),
    error: &TimeSeries,
) -> Result<TimeSeries> {
    let n = x1.len();
    if x2.len() != n || error.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: x2.len().max(error.len()),
        });
    }
    let (b0, b1, b2) = betas;
    TimeSeries::new(
        "y",
        (0..n)
            .map(|t| b0 + b1 * x1.values()[t] + b2 * x2.values()[t] + error.values()[t])
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluctuation::dfa_variance;
    use crate::series::{build_profile, ScaleGrid};
    use statrs::function::gamma::ln_gamma;

    #[test]
    fn weights_leading_terms() {
        // a_1 = d from Gamma(1+d) = d·Gamma(d); one more recurrence step
        // gives a_2 = d(1+d)/2
        for d in [-0.4, -0.1, 0.1, 0.4] {
            let w = arfima_weights(d, 5).unwrap();
            assert_eq!(w[0], 1.0);
            assert!((w[1] - d).abs() <= 1e-15);
            assert!((w[2] - d * (1.0 + d) / 2.0).abs() <= 1e-15);
        }
        let w = arfima_weights(0.4, 2).unwrap();
        assert!((w[2] - 0.28).abs() <= 1e-15);
    }

    #[test]
    fn weights_d_zero_is_identity() {
        let w = arfima_weights(0.0, 10).unwrap();
        assert_eq!(w[0], 1.0);
        assert!(w[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn weights_match_gamma_ratio() {
        // a_n = Gamma(n+d) / (Gamma(d)·Gamma(n+1)), evaluated through
        // log-Gamma. For n >= 1 and |d| < 0.5, Gamma(n+d) > 0; Gamma(d)
        // is negative exactly when d < 0 (Gamma(d) = Gamma(1+d)/d).
        for d in [-0.4, -0.1, 0.1, 0.4] {
            let w = arfima_weights(d, 20).unwrap();
            let (sign, ln_abs_gamma_d) = if d < 0.0 {
                (-1.0, ln_gamma(1.0 + d) - d.abs().ln())
            } else {
                (1.0, ln_gamma(d))
            };
            for n in 1..=20usize {
                let expected = sign
                    * (ln_gamma(n as f64 + d) - ln_abs_gamma_d - ln_gamma(n as f64 + 1.0)).exp();
                assert!(
                    (w[n] - expected).abs() <= 1e-10 * expected.abs().max(1e-10),
                    "d={d}, n={n}: {} vs {expected}",
                    w[n]
                );
            }
        }
    }

    #[test]
    fn weights_asymptotic_decay() {
        // for d > 0, a_n ~ n^(d-1): the a_100/a_200 ratio approaches 2^(1-d)
        for d in [0.1, 0.4] {
            let w = arfima_weights(d, 200).unwrap();
            let ratio = w[100] / w[200];
            let expected = 2.0f64.powf(1.0 - d);
            assert!(
                (ratio - expected).abs() / expected < 0.05,
                "d={d}: {ratio} vs {expected}"
            );
        }
    }

    #[test]
    fn weights_absolute_sums_stabilize_for_negative_d() {
        let w = arfima_weights(-0.3, 4000).unwrap();
        let partial_2k: f64 = w[..2000].iter().map(|v| v.abs()).sum();
        let partial_4k: f64 = w.iter().map(|v| v.abs()).sum();
        assert!((partial_4k - partial_2k) / partial_4k < 0.01);
    }

    #[test]
    fn weights_reject_boundary_d() {
        assert!(arfima_weights(0.5, 10).is_err());
        assert!(arfima_weights(-0.5, 10).is_err());
    }

    #[test]
    fn arfima_d_zero_matches_plain_noise() {
        let spec = ArfimaSpec::new(0.0, 256, 7).unwrap();
        let s = arfima_generate(&spec).unwrap();
        // weights are [1, 0, ...]: output equals the raw innovations
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noise: Vec<f64> = (0..256 + spec.truncation)
            .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        assert_eq!(s.values(), &noise[spec.truncation..]);
    }

    #[test]
    fn arfima_deterministic_per_seed() {
        let spec = ArfimaSpec::new(0.3, 128, 11).unwrap();
        assert_eq!(
            arfima_generate(&spec).unwrap().values(),
            arfima_generate(&spec).unwrap().values()
        );
        let other = ArfimaSpec::new(0.3, 128, 12).unwrap();
        assert_ne!(
            arfima_generate(&spec).unwrap().values(),
            arfima_generate(&other).unwrap().values()
        );
    }

    #[test]
    fn arfima_hurst_slope_matches_d() {
        // H = d + 0.5: the log-log slope of sqrt(F²) vs n should sit near
        // 0.9 for d = 0.4
        let spec = ArfimaSpec::new(0.4, 1 << 13, 99).unwrap();
        let s = arfima_generate(&spec).unwrap();
        let grid = ScaleGrid::logarithmic(10, 1 << 10, 20).unwrap();
        let f2 = dfa_variance(&build_profile(&s), &grid, 2).unwrap();
        let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        let m = grid.len() as f64;
        for (i, &n) in grid.scales().iter().enumerate() {
            let x = (n as f64).ln();
            let y = f2[i].sqrt().ln();
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        assert!((slope - 0.9).abs() <= 0.05, "slope = {slope}");
    }

    #[test]
    fn bmfs_small_case() {
        let s = bmfs_generate(&BmfsSpec::new(0.3, 2).unwrap()).unwrap();
        let expected = [0.09, 0.21, 0.21, 0.49];
        for (a, b) in s.values().iter().zip(&expected) {
            assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn bmfs_first_element_and_mass() {
        // total mass is (p + (1-p))^n = 1 by the binomial theorem;
        // compensated summation keeps the check meaningful at 2^20 terms
        for (p, n) in [(0.3, 10), (0.2, 15), (0.45, 20)] {
            let s = bmfs_generate(&BmfsSpec::new(p, n).unwrap()).unwrap();
            assert!((s.values()[0] - p.powi(n as i32)).abs() <= 1e-18);
            let mut mass = 0.0f64;
            let mut carry = 0.0f64;
            for &v in s.values() {
                let y = v - carry;
                let t = mass + y;
                carry = (t - mass) - y;
                mass = t;
            }
            assert!((mass - 1.0).abs() <= 1e-12, "p={p} n={n}: {mass}");
        }
    }

    #[test]
    fn bmfs_depth_cap() {
        assert!(BmfsSpec::new(0.3, 27).is_err());
        assert!(BmfsSpec::new(0.6, 10).is_err());
    }

    #[test]
    fn embed_threshold_below_min_is_identity() {
        let s = bmfs_generate(&BmfsSpec::new(0.3, 8).unwrap()).unwrap();
        let min = s.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let (out, replaced) = embed_in_noise(&s, min / 2.0, 1e-4, 1).unwrap();
        assert_eq!(replaced, 0);
        assert_eq!(out.values(), s.values());
    }

    #[test]
    fn embed_threshold_above_max_replaces_all() {
        let s = bmfs_generate(&BmfsSpec::new(0.3, 8).unwrap()).unwrap();
        let (_, replaced) = embed_in_noise(&s, 2.0, 1e-4, 1).unwrap();
        assert_eq!(replaced, s.len());
    }

    #[test]
    fn embed_replacement_count_matches_scan() {
        let s = bmfs_generate(&BmfsSpec::new(0.3, 15).unwrap()).unwrap();
        let threshold = 1e-5;
        let expected = s.values().iter().filter(|&&v| v < threshold).count();
        let (out, replaced) = embed_in_noise(&s, threshold, 1e-4, 5).unwrap();
        assert_eq!(replaced, expected);
        // surviving values pass through exactly
        for (a, b) in out.values().iter().zip(s.values()) {
            if *b >= threshold {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn regression_dataset_identities() {
        let x1 = TimeSeries::new("x1", vec![1.0, 2.0, 3.0]).unwrap();
        let x2 = TimeSeries::new("x2", vec![5.0, -1.0, 0.0]).unwrap();
        let zeros = TimeSeries::new("e", vec![0.0; 3]).unwrap();
        let y = make_regression_dataset(&x1, &x2, (0.0, 1.0, 0.0), &zeros).unwrap();
        assert_eq!(y.values(), x1.values());
        let y = make_regression_dataset(&x1, &x2, (1.0, 1.0, 2.0), &zeros).unwrap();
        assert_eq!(y.values(), &[12.0, 1.0, 4.0]);
    }
}
