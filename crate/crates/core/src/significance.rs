//! Scale-dependent hypothesis testing: t-statistics for the DFA
//! regression coefficients and Monte Carlo critical curves obtained by
//! independently shuffling every input series.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::coefficients::{dcca_matrix, rho_pdcca};
use crate::error::{Error, Result};
use crate::fluctuation::FluctuationSet;
use crate::regression::{dfa_regression, DfaRegressionFit};
use crate::series::{ScaleGrid, TimeSeries};

/// Per-scale t statistics under H0: beta_j = beta_null_j.
#[derive(Debug, Clone, Serialize)]
pub struct ScaleTStat {
    pub scales: Vec<usize>,
    pub t1: Vec<f64>,
    pub t2: Vec<f64>,
    pub warnings: Vec<String>,
}

/// t_j(n) = (beta_j(n) - beta_null_j) / sqrt(var(beta_j(n))).
pub fn t_statistics(fit: &DfaRegressionFit, beta_null: (f64, f64)) -> ScaleTStat {
    let mut scales = Vec::new();
    let mut t1 = Vec::new();
    let mut t2 = Vec::new();
    let mut warnings = Vec::new();
    for row in fit.rows() {
        if row.var_beta1 <= 0.0 || row.var_beta2 <= 0.0 {
            warnings.push(format!("scale {}: zero variance, skipped", row.scale));
            continue;
        }
        scales.push(row.scale);
        t1.push((row.beta1 - beta_null.0) / row.var_beta1.sqrt());
        t2.push((row.beta2 - beta_null.1) / row.var_beta2.sqrt());
    }
    ScaleTStat {
        scales,
        t1,
        t2,
        warnings,
    }
}

/// Uniform random permutation of the series values (Fisher-Yates).
pub fn shuffle_series(series: &TimeSeries, rng: &mut impl Rng) -> TimeSeries {
    let mut values = series.values().to_vec();
    values.shuffle(rng);
    TimeSeries::new(series.label(), values).expect("permutation preserves validity")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StatisticKind {
    T,
    Pdcca,
}

/// Per-scale empirical critical values from shuffled replications.
#[derive(Debug, Clone, Serialize)]
pub struct McCriticalCurve {
    pub scales: Vec<usize>,
    pub critical: Vec<f64>,
    pub alpha: f64,
    pub reps: usize,
    pub seed: u64,
    pub statistic_kind: StatisticKind,
    /// Replications discarded because the shuffled fit failed.
    pub failed_reps: usize,
}

fn check_mc_params(alpha: f64, reps: usize) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::InvalidParameter(format!(
            "alpha = {alpha} outside (0, 0.5]"
        )));
    }
    if reps < 100 {
        return Err(Error::InvalidParameter(format!(
            "reps = {reps} below minimum 100"
        )));
    }
    Ok(())
}

/// Empirical (1 - alpha) quantile: the ceil((1-alpha)·m)-th smallest.
fn empirical_quantile(sorted: &[f64], alpha: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let m = sorted.len() as f64;
    let idx = (((1.0 - alpha) * m).ceil() as usize).clamp(1, sorted.len());
    sorted[idx - 1]
}

/// RNG stream for one replication; schedule-independent by construction.
fn rep_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64 + 1);
    rng
}

fn finish_curve(
    grid: &ScaleGrid,
    per_scale: Vec<Vec<f64>>,
    failed: usize,
    reps: usize,
    alpha: f64,
    seed: u64,
    kind: StatisticKind,
) -> Result<McCriticalCurve> {
    if failed * 100 > reps {
        return Err(Error::TooManyFailedReps {
            failed,
            total: reps,
        });
    }
    let mut scales = Vec::new();
    let mut critical = Vec::new();
    for (si, mut values) in per_scale.into_iter().enumerate() {
        if values.is_empty() {
            continue; // scale degenerate in every rep: dropped
        }
        values.sort_unstable_by(f64::total_cmp);
        scales.push(grid.scales()[si]);
        critical.push(empirical_quantile(&values, alpha));
    }
    if scales.is_empty() {
        return Err(Error::AllScalesDegenerate);
    }
    Ok(McCriticalCurve {
        scales,
        critical,
        alpha,
        reps,
        seed,
        statistic_kind: kind,
        failed_reps: failed,
    })
}

fn merge_rep_results(
    grid: &ScaleGrid,
    results: Vec<Option<Vec<(usize, Vec<f64>)>>>,
) -> (Vec<Vec<f64>>, usize) {
    let mut per_scale: Vec<Vec<f64>> = vec![Vec::new(); grid.len()];
    let mut failed = 0;
    for rep in results {
        match rep {
            Some(rows) => {
                for (scale, values) in rows {
                    if let Some(si) = grid.scales().iter().position(|&n| n == scale) {
                        per_scale[si].extend(values);
                    }
                }
            }
            None => failed += 1,
        }
    }
    (per_scale, failed)
}

/// Critical curve t^c(n): every replication independently shuffles all
/// three series, refits the DFA regression, and pools |t1(n)| and |t2(n)|
/// into one per-scale null distribution.
pub fn mc_critical_t(
    y: &TimeSeries,
    x1: &TimeSeries,
    x2: &TimeSeries,
    grid: &ScaleGrid,
    order: usize,
    alpha: f64,
    reps: usize,
    seed: u64,
) -> Result<McCriticalCurve> {
    mc_critical_t_impl(y, x1, x2, grid, order, alpha, reps, seed, true).map(|mut v| v.remove(0))
}

/// Per-coefficient variant: separate null distributions (and curves) for
/// t1 and t2.
pub fn mc_critical_t_per_coefficient(
    y: &TimeSeries,
    x1: &TimeSeries,
    x2: &TimeSeries,
    grid: &ScaleGrid,
    order: usize,
    alpha: f64,
    reps: usize,
    seed: u64,
) -> Result<(McCriticalCurve, McCriticalCurve)> {
    let mut v = mc_critical_t_impl(y, x1, x2, grid, order, alpha, reps, seed, false)?;
    let second = v.remove(1);
    Ok((v.remove(0), second))
}

#[allow(clippy::too_many_arguments)]
fn mc_critical_t_impl(
    y: &TimeSeries,
    x1: &TimeSeries,
    x2: &TimeSeries,
    grid: &ScaleGrid,
    order: usize,
    alpha: f64,
    reps: usize,
    seed: u64,
    pool: bool,
) -> Result<Vec<McCriticalCurve>> {
    check_mc_params(alpha, reps)?;
    grid.validate_for_len(y.len())?;
    // each rep yields, per retained scale, either the pooled |t| pair or
    // (|t1|, |t2|) kept apart
    let results: Vec<Option<Vec<(usize, Vec<f64>)>>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rep_rng(seed, rep);
            let sy = shuffle_series(y, &mut rng);
            let sx1 = shuffle_series(x1, &mut rng);
            let sx2 = shuffle_series(x2, &mut rng);
            let fit = dfa_regression(&sy, &sx1, &sx2, grid, order).ok()?;
            let stats = t_statistics(&fit, (0.0, 0.0));
            Some(
                stats
                    .scales
                    .iter()
                    .enumerate()
                    .map(|(i, &scale)| (scale, vec![stats.t1[i].abs(), stats.t2[i].abs()]))
                    .collect(),
            )
        })
        .collect();
    if pool {
        let (per_scale, failed) = merge_rep_results(grid, results);
        return Ok(vec![finish_curve(
            grid,
            per_scale,
            failed,
            reps,
            alpha,
            seed,
            StatisticKind::T,
        )?]);
    }
    // split the per-rep pairs into two separate pools
    let mut first: Vec<Option<Vec<(usize, Vec<f64>)>>> = Vec::with_capacity(reps);
    let mut second: Vec<Option<Vec<(usize, Vec<f64>)>>> = Vec::with_capacity(reps);
    for rep in results {
        match rep {
            Some(rows) => {
                first.push(Some(
                    rows.iter()
                        .map(|(s, v)| (*s, vec![v[0]]))
                        .collect(),
                ));
                second.push(Some(
                    rows.iter()
                        .map(|(s, v)| (*s, vec![v[1]]))
                        .collect(),
                ));
            }
            None => {
                first.push(None);
                second.push(None);
            }
        }
    }
    let (p1, f1) = merge_rep_results(grid, first);
    let (p2, f2) = merge_rep_results(grid, second);
    Ok(vec![
        finish_curve(grid, p1, f1, reps, alpha, seed, StatisticKind::T)?,
        finish_curve(grid, p2, f2, reps, alpha, seed, StatisticKind::T)?,
    ])
}

/// Critical curve for |rho_PDCCA(n)|: every replication shuffles all
/// series independently and pools the partial coefficients of every
/// variable pair.
pub fn mc_critical_pdcca(
    series_list: &[TimeSeries],
    grid: &ScaleGrid,
    order: usize,
    alpha: f64,
    reps: usize,
    seed: u64,
) -> Result<McCriticalCurve> {
    check_mc_params(alpha, reps)?;
    if series_list.len() < 3 {
        return Err(Error::InvalidParameter(
            "mc_critical_pdcca needs at least 3 series".into(),
        ));
    }
    grid.validate_for_len(series_list[0].len())?;
    let labels: Vec<String> = series_list.iter().map(|s| s.label().to_string()).collect();
    let pairs: Vec<(usize, usize)> = (0..labels.len())
        .flat_map(|a| ((a + 1)..labels.len()).map(move |b| (a, b)))
        .collect();
    let results: Vec<Option<Vec<(usize, Vec<f64>)>>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rep_rng(seed, rep);
            let shuffled: Vec<TimeSeries> = series_list
                .iter()
                .map(|s| shuffle_series(s, &mut rng))
                .collect();
            let fluct = FluctuationSet::compute(&shuffled, grid, order).ok()?;
            let matrix = dcca_matrix(&fluct).ok()?;
            let mut rows: Vec<(usize, Vec<f64>)> = grid
                .scales()
                .iter()
                .map(|&n| (n, Vec::new()))
                .collect();
            for &(a, b) in &pairs {
                let rho = rho_pdcca(&matrix, &labels[a], &labels[b]).ok()?;
                for (i, r) in rho.iter().enumerate() {
                    rows[i].1.push(r.abs());
                }
            }
            Some(rows)
        })
        .collect();
    let (per_scale, failed) = merge_rep_results(grid, results);
    finish_curve(
        grid,
        per_scale,
        failed,
        reps,
        alpha,
        seed,
        StatisticKind::Pdcca,
    )
}

/// Per-scale significance flags: |observed(n)| strictly above the
/// critical value.
pub fn decide(
    curve: &McCriticalCurve,
    observed_scales: &[usize],
    observed: &[f64],
) -> Result<Vec<bool>> {
    if observed_scales != curve.scales.as_slice() || observed.len() != curve.critical.len() {
        return Err(Error::GridMismatch);
    }
    Ok(observed
        .iter()
        .zip(&curve.critical)
        .map(|(obs, crit)| obs.abs() > *crit)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(label: &str, len: usize, seed: u64) -> TimeSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TimeSeries::new(
            label,
            (0..len)
                .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                .collect(),
        )
        .unwrap()
    }

    fn small_fit() -> DfaRegressionFit {
        let x1 = gaussian("x1", 600, 1);
        let x2 = gaussian("x2", 600, 2);
        let noise = gaussian("e", 600, 3);
        let y = TimeSeries::new(
            "y",
            (0..600)
                .map(|t| 1.0 + x1.values()[t] + 2.0 * x2.values()[t] + noise.values()[t])
                .collect(),
        )
        .unwrap();
        let grid = ScaleGrid::from_scales(vec![8, 16, 32]).unwrap();
        dfa_regression(&y, &x1, &x2, &grid, 2).unwrap()
    }

    #[test]
    fn t_stat_definition() {
        let fit = small_fit();
        let stats = t_statistics(&fit, (0.0, 0.0));
        for (i, row) in fit.rows().iter().enumerate() {
            assert_eq!(stats.t1[i], row.beta1 / row.var_beta1.sqrt());
            assert_eq!(stats.t2[i], row.beta2 / row.var_beta2.sqrt());
        }
        // t = 0 at the true value; t = 1 one standard error away
        let row = &fit.rows()[0];
        let at_truth = t_statistics(&fit, (row.beta1, row.beta2));
        assert_eq!(at_truth.t1[0], 0.0);
        assert_eq!(at_truth.t2[0], 0.0);
        let shifted = t_statistics(&fit, (row.beta1 - row.var_beta1.sqrt(), 0.0));
        assert!((shifted.t1[0] - 1.0).abs() <= 1e-12);
        // sign(t) = sign(beta - beta0)
        let below = t_statistics(&fit, (row.beta1 + 1.0, row.beta2 - 1.0));
        assert!(below.t1[0] < 0.0 && below.t2[0] > 0.0);
    }

    #[test]
    fn shuffle_preserves_multiset_and_is_deterministic() {
        let s = gaussian("s", 500, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let a = shuffle_series(&s, &mut rng);
        let mut sa = a.values().to_vec();
        let mut so = s.values().to_vec();
        sa.sort_by(f64::total_cmp);
        so.sort_by(f64::total_cmp);
        assert_eq!(sa, so);
        assert_ne!(a.values(), s.values());
        let mut rng2 = ChaCha8Rng::seed_from_u64(42);
        let b = shuffle_series(&s, &mut rng2);
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn shuffle_length_one_unchanged() {
        let s = TimeSeries::new("s", vec![7.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(shuffle_series(&s, &mut rng).values(), &[7.0]);
    }

    #[test]
    fn quantile_conventions() {
        let sorted: Vec<f64> = (1..=100).map(|v| v as f64).collect();
        // alpha = 0.5 -> 50th smallest (median by the ceil convention)
        assert_eq!(empirical_quantile(&sorted, 0.5), 50.0);
        assert_eq!(empirical_quantile(&sorted, 0.01), 99.0);
    }

    #[test]
    fn mc_params_validated() {
        let y = gaussian("y", 200, 1);
        let x1 = gaussian("x1", 200, 2);
        let x2 = gaussian("x2", 200, 3);
        let grid = ScaleGrid::from_scales(vec![8, 16]).unwrap();
        assert!(mc_critical_t(&y, &x1, &x2, &grid, 2, 0.6, 200, 0).is_err());
        assert!(mc_critical_t(&y, &x1, &x2, &grid, 2, 0.01, 50, 0).is_err());
    }

    #[test]
    fn mc_critical_t_deterministic_and_positive() {
        let y = gaussian("y", 300, 4);
        let x1 = gaussian("x1", 300, 5);
        let x2 = gaussian("x2", 300, 6);
        let grid = ScaleGrid::from_scales(vec![8, 16, 32]).unwrap();
        let a = mc_critical_t(&y, &x1, &x2, &grid, 2, 0.05, 200, 7).unwrap();
        let b = mc_critical_t(&y, &x1, &x2, &grid, 2, 0.05, 200, 7).unwrap();
        assert_eq!(a.critical, b.critical);
        assert_eq!(a.scales, b.scales);
        assert!(a.critical.iter().all(|&c| c > 0.0));
        assert_eq!(a.failed_reps, 0);
    }

    #[test]
    fn mc_per_coefficient_curves_close_to_pooled() {
        let y = gaussian("y", 300, 14);
        let x1 = gaussian("x1", 300, 15);
        let x2 = gaussian("x2", 300, 16);
        let grid = ScaleGrid::from_scales(vec![8, 16]).unwrap();
        let pooled = mc_critical_t(&y, &x1, &x2, &grid, 2, 0.1, 400, 8).unwrap();
        let (c1, c2) = mc_critical_t_per_coefficient(&y, &x1, &x2, &grid, 2, 0.1, 400, 8).unwrap();
        for i in 0..pooled.critical.len() {
            for c in [&c1, &c2] {
                let rel = (c.critical[i] - pooled.critical[i]).abs() / pooled.critical[i];
                assert!(rel < 0.35, "pooled {} vs split {}", pooled.critical[i], c.critical[i]);
            }
        }
    }

    #[test]
    fn mc_pdcca_shuffled_curve_ignores_cross_dependence() {
        // perfectly correlated inputs: after shuffling, the critical curve
        // depends only on marginals, so it matches independent inputs with
        // the same marginals up to Monte Carlo noise
        let base = gaussian("a", 256, 20);
        let b = TimeSeries::new("b", base.values().to_vec()).unwrap();
        let c = TimeSeries::new("c", base.values().iter().map(|v| -v).collect()).unwrap();
        let grid = ScaleGrid::from_scales(vec![8, 16]).unwrap();
        let correlated =
            mc_critical_pdcca(&[base.clone(), b, c], &grid, 2, 0.1, 300, 31).unwrap();
        let ind = [
            base,
            gaussian("b", 256, 21),
            gaussian("c", 256, 22),
        ];
        let independent = mc_critical_pdcca(&ind, &grid, 2, 0.1, 300, 31).unwrap();
        for (a, b) in correlated.critical.iter().zip(&independent.critical) {
            assert!((a - b).abs() / b < 0.25, "{a} vs {b}");
        }
    }

    #[test]
    fn mc_pdcca_critical_shrinks_with_length() {
        let grid = ScaleGrid::from_scales(vec![8, 16]).unwrap();
        let labels = ["a", "b", "c"];
        let short: Vec<TimeSeries> = (0..3)
            .map(|i| gaussian(labels[i], 1 << 9, 40 + i as u64))
            .collect();
        let long: Vec<TimeSeries> = (0..3)
            .map(|i| gaussian(labels[i], 1 << 12, 50 + i as u64))
            .collect();
        let cs = mc_critical_pdcca(&short, &grid, 2, 0.05, 300, 1).unwrap();
        let cl = mc_critical_pdcca(&long, &grid, 2, 0.05, 300, 1).unwrap();
        for (s, l) in cs.critical.iter().zip(&cl.critical) {
            assert!(l < s, "critical should shrink with N: {s} -> {l}");
        }
    }

    #[test]
    fn decide_flags_and_boundary() {
        let curve = McCriticalCurve {
            scales: vec![8, 16],
            critical: vec![2.0, 3.0],
            alpha: 0.01,
            reps: 100,
            seed: 0,
            statistic_kind: StatisticKind::T,
            failed_reps: 0,
        };
        assert_eq!(
            decide(&curve, &[8, 16], &[0.0, 0.0]).unwrap(),
            vec![false, false]
        );
        assert_eq!(
            decide(&curve, &[8, 16], &[2.0 + 1e-9, -3.5]).unwrap(),
            vec![true, true]
        );
        // observed exactly equal to critical: strict inequality, not significant
        assert_eq!(
            decide(&curve, &[8, 16], &[2.0, 3.0]).unwrap(),
            vec![false, false]
        );
        assert!(matches!(
            decide(&curve, &[8, 32], &[0.0, 0.0]),
            Err(Error::GridMismatch)
        ));
    }
}
