//! Loading delimited series files, gap cleaning, and the meteorological
//! season split (winter spans the December/January year boundary).

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Season {
    Winter,
    Spring,
    Summer,
    Fall,
}

impl Season {
    pub const ALL: [Season; 4] = [Season::Winter, Season::Spring, Season::Summer, Season::Fall];

    /// Months belonging to the season (meteorological convention).
    pub fn months(self) -> [u32; 3] {
        match self {
            Season::Winter => [12, 1, 2],
            Season::Spring => [3, 4, 5],
            Season::Summer => [6, 7, 8],
            Season::Fall => [9, 10, 11],
        }
    }

    pub fn contains_month(self, month: u32) -> bool {
        self.months().contains(&month)
    }

    pub fn of_month(month: u32) -> Season {
        match month {
            12 | 1 | 2 => Season::Winter,
            3..=5 => Season::Spring,
            6..=8 => Season::Summer,
            _ => Season::Fall,
        }
    }
}

impl fmt::Display for Season {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Season::Winter => "winter",
            Season::Spring => "spring",
            Season::Summer => "summer",
            Season::Fall => "fall",
        };
        write!(f, "{name}")
    }
}

impl FromStr for Season {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "winter" => Ok(Season::Winter),
            "spring" => Ok(Season::Spring),
            "summer" => Ok(Season::Summer),
            "fall" => Ok(Season::Fall),
            other => Err(Error::InvalidParameter(format!("unknown season: {other}"))),
        }
    }
}

/// Which columns to read from a delimited file.
#[derive(Debug, Clone)]
pub struct ColumnSpec {
    pub timestamp_col: Option<String>,
    pub value_cols: Vec<String>,
    pub delimiter: u8,
}

impl ColumnSpec {
    pub fn new(value_cols: Vec<String>) -> Self {
        Self {
            timestamp_col: None,
            value_cols,
            delimiter: b',',
        }
    }

    pub fn with_timestamps(mut self, col: impl Into<String>) -> Self {
        self.timestamp_col = Some(col.into());
        self
    }

    pub fn with_delimiter(mut self, delimiter: u8) -> Self {
        self.delimiter = delimiter;
        self
    }
}

/// Equal-length named columns with optional timestamps and a cleaning log.
/// Missing or unparseable cells are held as NaN until `clean` runs.
#[derive(Debug, Clone)]
pub struct Dataset {
    timestamps: Option<Vec<NaiveDateTime>>,
    columns: Vec<(String, Vec<f64>)>,
    log: Vec<String>,
    source: String,
}

impl Dataset {
    pub fn from_columns(
        timestamps: Option<Vec<NaiveDateTime>>,
        columns: Vec<(String, Vec<f64>)>,
        source: impl Into<String>,
    ) -> Result<Self> {
        let Some(len) = columns.first().map(|(_, v)| v.len()) else {
            return Err(Error::EmptyInput);
        };
        for (name, values) in &columns {
            if values.len() != len {
                return Err(Error::LengthMismatch {
                    left: len,
                    right: values.len(),
                });
            }
            let _ = name;
        }
        if let Some(ts) = &timestamps {
            if ts.len() != len {
                return Err(Error::LengthMismatch {
                    left: len,
                    right: ts.len(),
                });
            }
            if let Some(row) = ts.windows(2).position(|w| w[0] >= w[1]) {
                return Err(Error::NonMonotonicTimestamps { row: row + 1 });
            }
        }
        Ok(Self {
            timestamps,
            columns,
            log: Vec::new(),
            source: source.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, |(_, v)| v.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn labels(&self) -> Vec<&str> {
        self.columns.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn timestamps(&self) -> Option<&[NaiveDateTime]> {
        self.timestamps.as_deref()
    }

    pub fn column(&self, label: &str) -> Result<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == label)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::MissingColumn(label.to_string()))
    }

    /// Column as a validated TimeSeries; fails while uncleaned gaps remain.
    pub fn series(&self, label: &str) -> Result<TimeSeries> {
        TimeSeries::new(label, self.column(label)?.to_vec())
    }

    pub fn cleaning_log(&self) -> &[String] {
        &self.log
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    fn push_log(&mut self, entry: String) {
        self.log.push(entry);
    }
}

/// Parses a delimited file with one header row. Unparseable or missing
/// numeric cells become NaN and are logged for `clean`.
pub fn load_csv(path: impl AsRef<Path>, spec: &ColumnSpec) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(spec.delimiter)
        .flexible(true)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let col_index = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let ts_index = spec
        .timestamp_col
        .as_deref()
        .map(col_index)
        .transpose()?;
    let value_indices: Vec<usize> = spec
        .value_cols
        .iter()
        .map(|c| col_index(c))
        .collect::<Result<_>>()?;

    let mut timestamps = ts_index.map(|_| Vec::new());
    let mut columns: Vec<(String, Vec<f64>)> = spec
        .value_cols
        .iter()
        .map(|c| (c.clone(), Vec::new()))
        .collect();
    let mut log = Vec::new();
    let mut valid_rows = 0usize;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if let (Some(ti), Some(ts)) = (ts_index, timestamps.as_mut()) {
            let raw = record.get(ti).unwrap_or("").trim();
            let parsed = parse_timestamp(raw).ok_or_else(|| {
                Error::InvalidParameter(format!("row {}: bad timestamp '{raw}'", row + 1))
            })?;
            ts.push(parsed);
        }
        let mut row_clean = true;
        for (ci, &fi) in value_indices.iter().enumerate() {
            let raw = record.get(fi).unwrap_or("").trim();
            let value = raw.parse::<f64>().ok().filter(|v| v.is_finite());
            match value {
                Some(v) => columns[ci].1.push(v),
                None => {
                    columns[ci].1.push(f64::NAN);
                    log.push(format!(
                        "row {}, column {}: missing or unparseable value '{raw}', flagged for cleaning",
                        row + 1,
                        columns[ci].0
                    ));
                    row_clean = false;
                }
            }
        }
        if row_clean {
            valid_rows += 1;
        }
    }
    if valid_rows == 0 {
        return Err(Error::NoValidRows(path.display().to_string()));
    }
    let mut ds = Dataset::from_columns(timestamps, columns, path.display().to_string())?;
    ds.log = log;
    Ok(ds)
}

fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    for fmt in [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ] {
        if let Ok(ts) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(ts);
        }
    }
    // date-only rows get midnight
    chrono::NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
}

/// Writes the dataset back out; numeric formatting is shortest-round-trip,
/// so a reload reproduces values exactly.
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    let mut header: Vec<String> = Vec::new();
    if dataset.timestamps.is_some() {
        header.push("timestamp".to_string());
    }
    header.extend(dataset.columns.iter().map(|(n, _)| n.clone()));
    writer.write_record(&header)?;
    for row in 0..dataset.len() {
        let mut record: Vec<String> = Vec::with_capacity(header.len());
        if let Some(ts) = &dataset.timestamps {
            record.push(ts[row].format("%Y-%m-%dT%H:%M:%S").to_string());
        }
        for (_, values) in &dataset.columns {
            record.push(format!("{}", values[row]));
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Gap-filling policy for `clean`.
#[derive(Debug, Clone, Copy)]
pub struct CleanPolicy {
    /// Longest NaN run filled by linear interpolation; longer runs cause
    /// the enclosing rows to be dropped in every column.
    pub interpolate_max_gap: usize,
}

impl Default for CleanPolicy {
    fn default() -> Self {
        Self {
            interpolate_max_gap: 6,
        }
    }
}

/// Fills short gaps by linear interpolation, drops rows in longer gaps
/// consistently across all columns, and records every action. Errors when
/// more than 20% of rows would be dropped.
pub fn clean(dataset: &Dataset, policy: CleanPolicy) -> Result<Dataset> {
    let len = dataset.len();
    let mut out = dataset.clone();
    let mut drop_rows: BTreeSet<usize> = BTreeSet::new();
    let mut actions = Vec::new();
    for (name, values) in out.columns.iter_mut() {
        let mut row = 0;
        while row < len {
            if !values[row].is_nan() {
                row += 1;
                continue;
            }
            let start = row;
            while row < len && values[row].is_nan() {
                row += 1;
            }
            let end = row; // exclusive
            let gap = end - start;
            let interior = start > 0 && end < len;
            if interior && gap <= policy.interpolate_max_gap {
                let left = values[start - 1];
                let right = values[end];
                for (step, value) in values[start..end].iter_mut().enumerate() {
                    let t = (step + 1) as f64 / (gap + 1) as f64;
                    *value = left + t * (right - left);
                }
                actions.push(format!(
                    "column {name}: interpolated gap of {gap} at rows {}..{}",
                    start + 1,
                    end
                ));
            } else {
                drop_rows.extend(start..end);
                actions.push(format!(
                    "column {name}: gap of {gap} at rows {}..{} exceeds policy, rows dropped",
                    start + 1,
                    end
                ));
            }
        }
    }
    if !drop_rows.is_empty() {
        if drop_rows.len() * 5 > len {
            return Err(Error::TooSparse {
                dropped: drop_rows.len(),
                total: len,
            });
        }
        let keep = |i: &usize| !drop_rows.contains(i);
        for (_, values) in out.columns.iter_mut() {
            let kept: Vec<f64> = values
                .iter()
                .enumerate()
                .filter(|(i, _)| keep(i))
                .map(|(_, v)| *v)
                .collect();
            *values = kept;
        }
        if let Some(ts) = out.timestamps.as_mut() {
            let kept: Vec<NaiveDateTime> = ts
                .iter()
                .enumerate()
                .filter(|(i, _)| keep(i))
                .map(|(_, v)| *v)
                .collect();
            *ts = kept;
        }
    }
    for action in actions {
        out.push_log(action);
    }
    Ok(out)
}

/// A dataset restricted to one season's rows, concatenated across years.
#[derive(Debug, Clone)]
pub struct SeasonalSlice {
    pub season: Season,
    pub dataset: Dataset,
}

/// All four seasonal slices; empty seasons surface as errors on access.
#[derive(Debug, Clone)]
pub struct SeasonalSplit {
    slices: Vec<(Season, Option<SeasonalSlice>)>,
}

impl SeasonalSplit {
    pub fn slice(&self, season: Season) -> Result<&SeasonalSlice> {
        self.slices
            .iter()
            .find(|(s, _)| *s == season)
            .and_then(|(_, slice)| slice.as_ref())
            .ok_or_else(|| Error::EmptySeason(season.to_string()))
    }
}

/// Partitions rows by meteorological season, preserving within-season
/// time order across years.
pub fn split_seasons(dataset: &Dataset) -> Result<SeasonalSplit> {
    let Some(timestamps) = dataset.timestamps() else {
        return Err(Error::InvalidParameter(
            "seasonal split requires timestamps".into(),
        ));
    };
    let mut slices = Vec::new();
    for season in Season::ALL {
        let rows: Vec<usize> = timestamps
            .iter()
            .enumerate()
            .filter(|(_, ts)| season.contains_month(ts.month()))
            .map(|(i, _)| i)
            .collect();
        if rows.is_empty() {
            slices.push((season, None));
            continue;
        }
        let columns = dataset
            .columns
            .iter()
            .map(|(n, v)| (n.clone(), rows.iter().map(|&i| v[i]).collect()))
            .collect();
        let ts: Vec<NaiveDateTime> = rows.iter().map(|&i| timestamps[i]).collect();
        let sliced = Dataset::from_columns(Some(ts), columns, dataset.source())?;
        slices.push((
            season,
            Some(SeasonalSlice {
                season,
                dataset: sliced,
            }),
        ));
    }
    Ok(SeasonalSplit { slices })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn t(y: i32, m: u32, d: u32, h: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(y, m, d)
            .unwrap()
            .and_hms_opt(h, 0, 0)
            .unwrap()
    }

    fn hourly(from: NaiveDateTime, count: usize) -> Vec<NaiveDateTime> {
        (0..count)
            .map(|i| from + chrono::Duration::hours(i as i64))
            .collect()
    }

    fn simple_dataset(values: Vec<f64>) -> Dataset {
        let ts = hourly(t(2014, 1, 1, 0), values.len());
        Dataset::from_columns(Some(ts), vec![("a".into(), values)], "test").unwrap()
    }

    #[test]
    fn clean_no_gaps_is_identity() {
        let ds = simple_dataset(vec![1.0, 2.0, 3.0, 4.0]);
        let cleaned = clean(&ds, CleanPolicy::default()).unwrap();
        assert_eq!(cleaned.column("a").unwrap(), ds.column("a").unwrap());
        assert_eq!(cleaned.len(), 4);
    }

    #[test]
    fn clean_linear_midpoint() {
        let ds = simple_dataset(vec![2.0, f64::NAN, 4.0]);
        let cleaned = clean(&ds, CleanPolicy::default()).unwrap();
        assert_eq!(cleaned.column("a").unwrap(), &[2.0, 3.0, 4.0]);
        assert!(!cleaned.cleaning_log().is_empty());
    }

    #[test]
    fn clean_long_gap_drops_rows_in_all_columns() {
        let len = 50;
        let mut a: Vec<f64> = (0..len).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..len).map(|i| 2.0 * i as f64).collect();
        for v in a.iter_mut().skip(10).take(3) {
            *v = f64::NAN;
        }
        let ts = hourly(t(2014, 1, 1, 0), len);
        let ds = Dataset::from_columns(
            Some(ts),
            vec![("a".into(), a), ("b".into(), b)],
            "test",
        )
        .unwrap();
        let policy = CleanPolicy {
            interpolate_max_gap: 2,
        };
        let cleaned = clean(&ds, policy).unwrap();
        assert_eq!(cleaned.len(), len - 3);
        assert_eq!(cleaned.column("a").unwrap().len(), cleaned.column("b").unwrap().len());
        assert!(cleaned.column("a").unwrap().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn clean_too_sparse_rejected() {
        let mut values = vec![f64::NAN; 30];
        values[0] = 1.0;
        values[29] = 2.0;
        let ds = simple_dataset(values);
        assert!(matches!(
            clean(&ds, CleanPolicy::default()),
            Err(Error::TooSparse { .. })
        ));
    }

    #[test]
    fn clean_is_idempotent() {
        let mut values: Vec<f64> = (0..60).map(|i| i as f64).collect();
        values[10] = f64::NAN;
        values[30] = f64::NAN;
        values[31] = f64::NAN;
        let ds = simple_dataset(values);
        let policy = CleanPolicy {
            interpolate_max_gap: 1,
        };
        let once = clean(&ds, policy).unwrap();
        let twice = clean(&once, policy).unwrap();
        assert_eq!(once.column("a").unwrap(), twice.column("a").unwrap());
        assert_eq!(once.len(), twice.len());
    }

    #[test]
    fn split_rows_only_in_july() {
        let ts = hourly(t(2014, 7, 1, 0), 24);
        let ds = Dataset::from_columns(
            Some(ts),
            vec![("a".into(), (0..24).map(|i| i as f64).collect())],
            "test",
        )
        .unwrap();
        let split = split_seasons(&ds).unwrap();
        assert_eq!(split.slice(Season::Summer).unwrap().dataset.len(), 24);
        for season in [Season::Winter, Season::Spring, Season::Fall] {
            assert!(matches!(split.slice(season), Err(Error::EmptySeason(_))));
        }
    }

    #[test]
    fn winter_spans_year_boundary() {
        let mut ts = hourly(t(2013, 12, 31, 22), 2);
        ts.extend(hourly(t(2014, 1, 1, 0), 2));
        let ds = Dataset::from_columns(
            Some(ts),
            vec![("a".into(), vec![1.0, 2.0, 3.0, 4.0])],
            "test",
        )
        .unwrap();
        let split = split_seasons(&ds).unwrap();
        let winter = split.slice(Season::Winter).unwrap();
        assert_eq!(winter.dataset.len(), 4);
    }

    #[test]
    fn three_years_hourly_winter_length() {
        // Dec 1, 2013 .. Nov 30, 2016 hourly; winters include the 2016
        // leap February
        let start = t(2013, 12, 1, 0);
        let end = t(2016, 11, 30, 23);
        let count = ((end - start).num_hours() + 1) as usize;
        let ts = hourly(start, count);
        let ds = Dataset::from_columns(
            Some(ts),
            vec![("a".into(), vec![0.0; count])],
            "test",
        )
        .unwrap();
        let split = split_seasons(&ds).unwrap();
        let winter_len = split.slice(Season::Winter).unwrap().dataset.len();
        // winters: 90 + 90 + 91 (leap) days
        assert_eq!(winter_len, (90 + 90 + 91) * 24);
    }

    #[test]
    fn split_partition_is_exact() {
        let ts = hourly(t(2014, 1, 15, 0), 24 * 400);
        let values: Vec<f64> = (0..24 * 400).map(|i| i as f64).collect();
        let ds = Dataset::from_columns(Some(ts), vec![("a".into(), values)], "test").unwrap();
        let split = split_seasons(&ds).unwrap();
        let mut total = 0;
        let mut seen = BTreeSet::new();
        for season in Season::ALL {
            let slice = split.slice(season).unwrap();
            total += slice.dataset.len();
            let col = slice.dataset.column("a").unwrap();
            let stamps = slice.dataset.timestamps().unwrap();
            for (i, &v) in col.iter().enumerate() {
                assert!(seen.insert(v as usize), "row {v} in two seasons");
                assert!(season.contains_month(stamps[i].month()));
            }
        }
        assert_eq!(total, ds.len());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let ts = hourly(t(2014, 3, 1, 0), 10);
        let values: Vec<f64> = (0..10).map(|i| (i as f64 * 0.37).sin() * 123.456789012345).collect();
        let ds = Dataset::from_columns(Some(ts), vec![("pm".into(), values.clone())], "mem")
            .unwrap();
        write_csv(&ds, &path).unwrap();
        let spec = ColumnSpec::new(vec!["pm".into()]).with_timestamps("timestamp");
        let loaded = load_csv(&path, &spec).unwrap();
        assert_eq!(loaded.column("pm").unwrap(), &values[..]);
        assert_eq!(loaded.timestamps().unwrap(), ds.timestamps().unwrap());
    }

    #[test]
    fn csv_missing_column_and_blank_cell() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        std::fs::write(&path, "timestamp,a,b\n2014-01-01T00:00:00,1.0,2.0\n2014-01-01T01:00:00,,3.0\n").unwrap();
        let spec = ColumnSpec::new(vec!["a".into(), "b".into()]).with_timestamps("timestamp");
        let ds = load_csv(&path, &spec).unwrap();
        assert_eq!(ds.len(), 2);
        assert!(ds.column("a").unwrap()[1].is_nan());
        assert_eq!(ds.cleaning_log().len(), 1);
        let bad = ColumnSpec::new(vec!["missing".into()]);
        assert!(matches!(
            load_csv(&path, &bad),
            Err(Error::MissingColumn(_))
        ));
    }

    #[test]
    fn csv_all_rows_invalid_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "a\nx\ny\n").unwrap();
        let spec = ColumnSpec::new(vec!["a".into()]);
        assert!(matches!(
            load_csv(&path, &spec),
            Err(Error::NoValidRows(_))
        ));
    }
}
