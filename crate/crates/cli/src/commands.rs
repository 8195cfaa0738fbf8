//! Implementations of the five subcommands.
//!
//! Each command returns a one-line summary for standard output; tables and
//! metadata go to files under `--out-dir`, logs to standard error.

use std::path::Path;
use std::time::Instant;

use scalereg_core::coefficients::{dcca_matrix, partial_corr_classic, rho_pdcca};
use scalereg_core::fluctuation::{dfa_variance, FluctuationSet};
use scalereg_core::ingestion::{
    clean, load_csv, split_seasons, write_csv, CleanPolicy, ColumnSpec, Dataset, Season,
};
use scalereg_core::regression::{dfa_regression, ols_fit, DfaRegressionFit};
use scalereg_core::significance::{
    decide, mc_critical_pdcca, mc_critical_t, t_statistics, McCriticalCurve,
};
use scalereg_core::synthgen::{
    arfima_generate, bmfs_generate, embed_in_noise, make_regression_dataset, ArfimaSpec, BmfsSpec,
};
use scalereg_core::{build_profile, Error, Result, ScaleGrid};
use serde_json::{json, Value};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::output::{Cell, OutputFormat, ResultBundle, Table};
use crate::{AnalysisArgs, SynthArgs};

pub fn parse_format(s: &str) -> Result<OutputFormat> {
    match s {
        "csv" => Ok(OutputFormat::Csv),
        "json" => Ok(OutputFormat::Json),
        other => Err(Error::InvalidParameter(format!("unknown format: {other}"))),
    }
}

/// Seed precedence: --seed flag, then SCALEREG_SEED, then 0.
pub fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("SCALEREG_SEED") {
        Ok(raw) => raw
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("SCALEREG_SEED = {raw:?} is not a u64"))),
        Err(_) => Ok(0),
    }
}

/// Parses `--scales MIN:MAX:COUNT` into a logarithmic grid.
fn parse_scales(spec: &str) -> Result<ScaleGrid> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [min, max, count] = parts.as_slice() else {
        return Err(Error::InvalidParameter(format!(
            "--scales must be MIN:MAX:COUNT, got {spec:?}"
        )));
    };
    let parse = |s: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::InvalidParameter(format!("bad scale component: {s:?}")))
    };
    ScaleGrid::logarithmic(parse(min)?, parse(max)?, parse(count)?)
}

fn grid_for(args: &AnalysisArgs, series_len: usize) -> Result<ScaleGrid> {
    let grid = match &args.scales {
        Some(spec) => parse_scales(spec)?,
        None => ScaleGrid::default_for_len(series_len)?,
    };
    grid.validate_for_len(series_len)?;
    Ok(grid)
}

fn check_distinct(cols: &[&String]) -> Result<()> {
    for (i, a) in cols.iter().enumerate() {
        for b in &cols[i + 1..] {
            if a == b {
                return Err(Error::InvalidParameter(format!(
                    "column {a:?} referenced twice"
                )));
            }
        }
    }
    Ok(())
}

/// Loads, cleans, and (optionally) restricts the input to one season.
/// Returns the dataset plus the accumulated cleaning log.
fn load_input(args: &AnalysisArgs, value_cols: &[String]) -> Result<(Dataset, Vec<String>)> {
    let mut refs: Vec<&String> = value_cols.iter().collect();
    if let Some(ts) = &args.timestamp_col {
        refs.push(ts);
    }
    check_distinct(&refs)?;

    let season: Option<Season> = match args.season.as_str() {
        "all" => None,
        other => Some(other.parse()?),
    };
    if season.is_some() && args.timestamp_col.is_none() {
        return Err(Error::InvalidParameter(
            "--season needs --timestamp-col".into(),
        ));
    }

    let mut spec = ColumnSpec::new(value_cols.to_vec());
    if let Some(ts) = &args.timestamp_col {
        spec = spec.with_timestamps(ts.clone());
    }
    let raw = load_csv(&args.input, &spec)?;
    let cleaned = clean(&raw, CleanPolicy::default())?;
    let mut log: Vec<String> = cleaned.cleaning_log().to_vec();

    let dataset = match season {
        None => cleaned,
        Some(season) => {
            let split = split_seasons(&cleaned)?;
            let slice = split.slice(season)?;
            log.push(format!(
                "restricted to {}: {} of {} rows",
                season,
                slice.dataset.len(),
                cleaned.len()
            ));
            slice.dataset.clone()
        }
    };
    Ok((dataset, log))
}

fn metadata(command: &str, config: Value, seed: Option<u64>, started: Instant, warnings: Vec<String>) -> Value {
    let mut meta = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "timing_ms": started.elapsed().as_millis() as u64,
        "warnings": warnings,
    });
    if let Some(seed) = seed {
        meta["seed"] = json!(seed);
    }
    meta
}

fn emit(bundle: &ResultBundle, out_dir: &Path, format: OutputFormat) -> Result<String> {
    let paths = bundle.write(out_dir, format)?;
    for path in &paths {
        eprintln!("wrote {}", path.display());
    }
    Ok(format!(
        "{} file(s) written to {}",
        paths.len(),
        out_dir.display()
    ))
}

/// The three analysis roles, in a fixed order. `dfa` accepts any subset;
/// the regression commands need all three.
fn requested_columns(args: &AnalysisArgs) -> Vec<String> {
    [&args.y_col, &args.x1_col, &args.x2_col]
        .into_iter()
        .flatten()
        .cloned()
        .collect()
}

fn regression_columns(args: &AnalysisArgs) -> Result<(String, String, String)> {
    match (&args.y_col, &args.x1_col, &args.x2_col) {
        (Some(y), Some(x1), Some(x2)) => Ok((y.clone(), x1.clone(), x2.clone())),
        _ => Err(Error::InvalidParameter(
            "--y-col, --x1-col, and --x2-col are all required".into(),
        )),
    }
}

/// Least-squares slope of log sqrt(F²) against log n; absent when fewer
/// than two scales have positive fluctuation.
fn loglog_slope(scales: &[usize], f2: &[f64]) -> Option<f64> {
    let points: Vec<(f64, f64)> = scales
        .iter()
        .zip(f2)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&n, &v)| ((n as f64).ln(), 0.5 * v.ln()))
        .collect();
    if points.len() < 2 {
        return None;
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|(x, _)| x).sum::<f64>() / m;
    let my = points.iter().map(|(_, y)| y).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn cmd_dfa(args: &AnalysisArgs) -> Result<String> {
    let started = Instant::now();
    let format = parse_format(&args.format)?;
    let cols = requested_columns(args);
    if cols.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one of --y-col/--x1-col/--x2-col is required".into(),
        ));
    }
    let (dataset, mut warnings) = load_input(args, &cols)?;
    let grid = grid_for(args, dataset.len())?;

    let mut header: Vec<String> = vec!["scale".into()];
    header.extend(cols.iter().map(|c| format!("f2_{c}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut fluct_table = Table::new("dfa_fluctuation", &header_refs);
    let mut slope_table = Table::new("dfa_slopes", &["column", "slope", "scales_used"]);

    let mut curves = Vec::new();
    for col in &cols {
        let profile = build_profile(&dataset.series(col)?);
        let f2 = dfa_variance(&profile, &grid, args.order)?;
        let slope = loglog_slope(grid.scales(), &f2);
        let used = f2.iter().filter(|&&v| v > 0.0).count();
        if slope.is_none() {
            warnings.push(format!("{col}: slope undefined ({used} positive scales)"));
        }
        slope_table.push(vec![
            Cell::Text(col.clone()),
            Cell::opt(slope),
            Cell::Int(used as i64),
        ]);
        curves.push(f2);
    }
    for (i, &scale) in grid.scales().iter().enumerate() {
        let mut row = vec![Cell::Int(scale as i64)];
        row.extend(curves.iter().map(|c| Cell::Float(c[i])));
        fluct_table.push(row);
    }

    let bundle = ResultBundle {
        tables: vec![fluct_table, slope_table],
        metadata: metadata("dfa", json!(args), None, started, warnings),
    };
    let written = emit(&bundle, &args.out_dir, format)?;
    Ok(format!(
        "dfa: {} column(s), {} scales; {written}",
        cols.len(),
        grid.len()
    ))
}

fn dfa_regression_table(fit: &DfaRegressionFit) -> Table {
    let mut table = Table::new(
        "dfa_regression",
        &[
            "scale",
            "beta1",
            "beta2",
            "var_beta1",
            "var_beta2",
            "ci_beta1_low",
            "ci_beta1_high",
            "ci_beta2_low",
            "ci_beta2_high",
            "beta1_star",
            "beta2_star",
            "elasticity1",
            "elasticity2",
            "implied_intercept",
            "residual_fluct",
            "r_squared_dfa",
        ],
    );
    for row in fit.rows() {
        table.push(vec![
            Cell::Int(row.scale as i64),
            Cell::Float(row.beta1),
            Cell::Float(row.beta2),
            Cell::Float(row.var_beta1),
            Cell::Float(row.var_beta2),
            Cell::Float(row.ci_beta1.0),
            Cell::Float(row.ci_beta1.1),
            Cell::Float(row.ci_beta2.0),
            Cell::Float(row.ci_beta2.1),
            Cell::Float(row.beta_star.0),
            Cell::Float(row.beta_star.1),
            Cell::opt(row.elasticity.map(|e| e.0)),
            Cell::opt(row.elasticity.map(|e| e.1)),
            Cell::Float(row.implied_intercept),
            Cell::Float(row.residual_fluct),
            Cell::Float(row.r_squared_dfa),
        ]);
    }
    table
}

pub fn cmd_regress(args: &AnalysisArgs) -> Result<String> {
    let started = Instant::now();
    let format = parse_format(&args.format)?;
    let (y_col, x1_col, x2_col) = regression_columns(args)?;
    let (dataset, mut warnings) =
        load_input(args, &[y_col.clone(), x1_col.clone(), x2_col.clone()])?;
    let y = dataset.series(&y_col)?;
    let x1 = dataset.series(&x1_col)?;
    let x2 = dataset.series(&x2_col)?;
    let grid = grid_for(args, y.len())?;

    let ols = ols_fit(&y, &x1, &x2)?;
    let mut ols_table = Table::new(
        "ols_fit",
        &[
            "n",
            "beta0",
            "beta1",
            "beta2",
            "var_beta1",
            "var_beta2",
            "r_squared",
            "beta1_star",
            "beta2_star",
            "elasticity1",
            "elasticity2",
        ],
    );
    ols_table.push(vec![
        Cell::Int(y.len() as i64),
        Cell::Float(ols.beta0),
        Cell::Float(ols.beta1),
        Cell::Float(ols.beta2),
        Cell::Float(ols.var_beta1),
        Cell::Float(ols.var_beta2),
        Cell::Float(ols.r_squared),
        Cell::Float(ols.beta_star.0),
        Cell::Float(ols.beta_star.1),
        Cell::opt(ols.elasticity.map(|e| e.0)),
        Cell::opt(ols.elasticity.map(|e| e.1)),
    ]);

    let fit = dfa_regression(&y, &x1, &x2, &grid, args.order)?;
    warnings.extend(fit.warnings().iter().cloned());
    let retained = fit.rows().len();

    let bundle = ResultBundle {
        tables: vec![ols_table, dfa_regression_table(&fit)],
        metadata: metadata("regress", json!(args), None, started, warnings),
    };
    let written = emit(&bundle, &args.out_dir, format)?;
    Ok(format!(
        "regress: N = {}, {retained} of {} scales retained; {written}",
        y.len(),
        grid.len()
    ))
}

/// Restricts a critical curve to the scales shared with an observed
/// statistic so `decide` sees matching grids. Degenerate scales can drop
/// from either side independently.
fn align_to_curve(
    curve: &McCriticalCurve,
    scales: &[usize],
    observed: &[f64],
) -> (McCriticalCurve, Vec<usize>, Vec<f64>) {
    let mut kept = curve.clone();
    kept.scales.clear();
    kept.critical.clear();
    let mut out_scales = Vec::new();
    let mut out_obs = Vec::new();
    for (i, &n) in scales.iter().enumerate() {
        if let Some(j) = curve.scales.iter().position(|&c| c == n) {
            kept.scales.push(n);
            kept.critical.push(curve.critical[j]);
            out_scales.push(n);
            out_obs.push(observed[i]);
        }
    }
    (kept, out_scales, out_obs)
}

pub fn cmd_significance(args: &AnalysisArgs) -> Result<String> {
    let started = Instant::now();
    let format = parse_format(&args.format)?;
    let seed = resolve_seed(args.seed)?;
    let (y_col, x1_col, x2_col) = regression_columns(args)?;
    let (dataset, mut warnings) =
        load_input(args, &[y_col.clone(), x1_col.clone(), x2_col.clone()])?;
    let y = dataset.series(&y_col)?;
    let x1 = dataset.series(&x1_col)?;
    let x2 = dataset.series(&x2_col)?;
    let grid = grid_for(args, y.len())?;

    let fit = dfa_regression(&y, &x1, &x2, &grid, args.order)?;
    warnings.extend(fit.warnings().iter().cloned());
    let stats = t_statistics(&fit, (0.0, 0.0));
    warnings.extend(stats.warnings.iter().cloned());

    eprintln!("running {} t-statistic replications...", args.reps);
    let t_curve = mc_critical_t(&y, &x1, &x2, &grid, args.order, args.alpha, args.reps, seed)?;
    if t_curve.failed_reps > 0 {
        warnings.push(format!("{} shuffled fits failed", t_curve.failed_reps));
    }
    let (aligned, scales, t1) = align_to_curve(&t_curve, &stats.scales, &stats.t1);
    let (_, _, t2) = align_to_curve(&t_curve, &stats.scales, &stats.t2);
    let sig1 = decide(&aligned, &scales, &t1)?;
    let sig2 = decide(&aligned, &scales, &t2)?;
    let mut t_table = Table::new(
        "t_significance",
        &["scale", "t1", "t2", "t_critical", "sig_beta1", "sig_beta2"],
    );
    for i in 0..scales.len() {
        t_table.push(vec![
            Cell::Int(scales[i] as i64),
            Cell::Float(t1[i]),
            Cell::Float(t2[i]),
            Cell::Float(aligned.critical[i]),
            Cell::Bool(sig1[i]),
            Cell::Bool(sig2[i]),
        ]);
    }

    let triple = [y.clone(), x1.clone(), x2.clone()];
    let fluct = FluctuationSet::compute(&triple, &grid, args.order)?;
    let matrix = dcca_matrix(&fluct)?;
    let pairs = [
        (y.label().to_string(), x1.label().to_string()),
        (y.label().to_string(), x2.label().to_string()),
        (x1.label().to_string(), x2.label().to_string()),
    ];
    eprintln!("running {} partial-coefficient replications...", args.reps);
    let p_curve = mc_critical_pdcca(&triple, &grid, args.order, args.alpha, args.reps, seed)?;
    if p_curve.failed_reps > 0 {
        warnings.push(format!(
            "{} shuffled partial-coefficient fits failed",
            p_curve.failed_reps
        ));
    }
    let mut header: Vec<String> = vec!["scale".into(), "rho_critical".into()];
    for (a, b) in &pairs {
        header.push(format!("rho_{a}_{b}"));
        header.push(format!("sig_{a}_{b}"));
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut p_table = Table::new("pdcca_significance", &header_refs);
    let mut pair_results = Vec::new();
    for (a, b) in &pairs {
        let rho = rho_pdcca(&matrix, a, b)?;
        let (aligned, scales, obs) = align_to_curve(&p_curve, matrix.scales(), &rho);
        let flags = decide(&aligned, &scales, &obs)?;
        pair_results.push((scales, obs, flags));
    }
    let (p_scales, _, _) = &pair_results[0];
    for (i, &scale) in p_scales.iter().enumerate() {
        let j = p_curve
            .scales
            .iter()
            .position(|&c| c == scale)
            .expect("aligned scale present in curve");
        let mut row = vec![Cell::Int(scale as i64), Cell::Float(p_curve.critical[j])];
        for (_, obs, flags) in &pair_results {
            row.push(Cell::Float(obs[i]));
            row.push(Cell::Bool(flags[i]));
        }
        p_table.push(row);
    }

    let flagged = sig1.iter().chain(&sig2).filter(|&&f| f).count();
    let bundle = ResultBundle {
        tables: vec![t_table, p_table],
        metadata: metadata("significance", json!(args), Some(seed), started, warnings),
    };
    let written = emit(&bundle, &args.out_dir, format)?;
    Ok(format!(
        "significance: {flagged} of {} coefficient flags at alpha = {}; {written}",
        2 * scales.len(),
        args.alpha
    ))
}

pub fn cmd_partial(args: &AnalysisArgs) -> Result<String> {
    let started = Instant::now();
    let format = parse_format(&args.format)?;
    let (y_col, x1_col, x2_col) = regression_columns(args)?;
    let (dataset, warnings) =
        load_input(args, &[y_col.clone(), x1_col.clone(), x2_col.clone()])?;
    let y = dataset.series(&y_col)?;
    let x1 = dataset.series(&x1_col)?;
    let x2 = dataset.series(&x2_col)?;
    let n = y.len();
    if n < 4 {
        return Err(Error::InvalidParameter("partial needs N >= 4".into()));
    }
    let dof = n as f64 - 3.0;
    let t_critical = StudentsT::new(0.0, 1.0, dof)
        .expect("dof >= 1")
        .inverse_cdf(1.0 - args.alpha / 2.0);

    let mut table = Table::new(
        "partial_correlation",
        &["var_a", "var_b", "control", "n", "r", "t", "t_critical", "significant", "note"],
    );
    let triples = [(&y, &x1, &x2), (&y, &x2, &x1), (&x1, &x2, &y)];
    for (a, b, control) in triples {
        let head = vec![
            Cell::Text(a.label().to_string()),
            Cell::Text(b.label().to_string()),
            Cell::Text(control.label().to_string()),
            Cell::Int(n as i64),
        ];
        match partial_corr_classic(a, b, control) {
            Ok((r, t)) => {
                let mut row = head;
                row.extend([
                    Cell::Float(r),
                    Cell::Float(t),
                    Cell::Float(t_critical),
                    Cell::Bool(t.abs() > t_critical),
                    Cell::Text(String::new()),
                ]);
                table.push(row);
            }
            // collinearity is a per-pair annotation, not a run failure
            Err(Error::Collinear) => {
                let mut row = head;
                row.extend([
                    Cell::Absent,
                    Cell::Absent,
                    Cell::Float(t_critical),
                    Cell::Bool(false),
                    Cell::Text("collinear inputs".into()),
                ]);
                table.push(row);
            }
            Err(e) => return Err(e),
        }
    }

    let bundle = ResultBundle {
        tables: vec![table],
        metadata: metadata("partial", json!(args), None, started, warnings),
    };
    let written = emit(&bundle, &args.out_dir, format)?;
    Ok(format!("partial: 3 pairs at N = {n}; {written}"))
}

fn parse_betas(spec: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<&str> = spec.split(',').collect();
    let [b0, b1, b2] = parts.as_slice() else {
        return Err(Error::InvalidParameter(format!(
            "--betas must be B0,B1,B2, got {spec:?}"
        )));
    };
    let parse = |s: &str| -> Result<f64> {
        s.trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad beta: {s:?}")))
    };
    Ok((parse(b0)?, parse(b1)?, parse(b2)?))
}

pub fn cmd_synth(args: &SynthArgs) -> Result<String> {
    let started = Instant::now();
    let seed = resolve_seed(args.seed)?;
    let mut extra = serde_json::Map::new();

    let (file_stem, columns): (&str, Vec<(String, Vec<f64>)>) = match args.kind.as_str() {
        "arfima" => {
            let series = arfima_generate(&ArfimaSpec::new(args.d, args.length, seed)?)?;
            ("synth_arfima", vec![("x".into(), series.values().to_vec())])
        }
        "bmfs" => {
            let base = bmfs_generate(&BmfsSpec::new(args.p, args.depth)?)?;
            let series = match (args.threshold, args.noise_sd) {
                (Some(threshold), Some(noise_sd)) => {
                    let (contaminated, replaced) =
                        embed_in_noise(&base, threshold, noise_sd, seed)?;
                    extra.insert("replaced_values".into(), json!(replaced));
                    contaminated
                }
                (None, None) => base,
                _ => {
                    return Err(Error::InvalidParameter(
                        "--threshold and --noise-sd must be given together".into(),
                    ))
                }
            };
            ("synth_bmfs", vec![("x1".into(), series.values().to_vec())])
        }
        "regression" => {
            let betas = parse_betas(&args.betas)?;
            let x1 = arfima_generate(&ArfimaSpec::new(args.d, args.length, seed)?)?;
            let x2 = arfima_generate(&ArfimaSpec::new(args.d, args.length, seed + 1)?)?;
            // d = 0 reduces the ARFIMA filter to its white-noise innovations
            let eps =
                arfima_generate(&ArfimaSpec::new(args.d_eps.unwrap_or(0.0), args.length, seed + 2)?)?;
            let y = make_regression_dataset(&x1, &x2, betas, &eps)?;
            (
                "synth_regression",
                vec![
                    ("x1".into(), x1.values().to_vec()),
                    ("x2".into(), x2.values().to_vec()),
                    ("y".into(), y.values().to_vec()),
                ],
            )
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown synth kind: {other}"
            )))
        }
    };

    let rows = columns[0].1.len();
    let dataset = Dataset::from_columns(None, columns, file_stem)?;
    std::fs::create_dir_all(&args.out_dir)?;
    let data_path = args.out_dir.join(format!("{file_stem}.csv"));
    write_csv(&dataset, &data_path)?;
    eprintln!("wrote {}", data_path.display());

    let mut meta = metadata("synth", json!(args), Some(seed), started, Vec::new());
    for (k, v) in extra {
        meta[k] = v;
    }
    let meta_path = args.out_dir.join("metadata.json");
    std::fs::write(&meta_path, format!("{meta:#}\n"))?;
    eprintln!("wrote {}", meta_path.display());

    Ok(format!(
        "synth {}: {rows} rows -> {}",
        args.kind,
        data_path.display()
    ))
}
