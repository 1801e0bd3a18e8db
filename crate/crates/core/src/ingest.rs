//! Telemetry CSV ingestion and cleaning.
//!
//! The canonical log is a UTF-8 CSV with a header row naming at least
//! `timestamp_ms,ue_id,tti,mcs,snr_db,bler,brate_kbps` (any order, matched
//! case-insensitively). An optional `scenario` column is kept as a free-form
//! tag; any other column is ignored. A `bler_pct` column may stand in for
//! `bler`, in which case values are divided by 100 at parse time.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Highest valid NR MCS index.
pub const MAX_MCS: u8 = 28;

/// One per-TTI PHY telemetry sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub timestamp_ms: i64,
    pub ue_id: u32,
    pub tti: u64,
    pub mcs: u8,
    pub snr_db: f64,
    /// Block error rate as a fraction in `[0, 1]`.
    pub bler: f64,
    pub brate_kbps: f64,
    pub scenario: Option<String>,
}

impl MetricRecord {
    /// Checks the per-record value invariants.
    pub fn validate(&self) -> Result<(), &'static str> {
        if self.mcs > MAX_MCS {
            return Err("mcs outside 0..=28");
        }
        if !self.snr_db.is_finite() {
            return Err("snr_db is not finite");
        }
        if !(0.0..=1.0).contains(&self.bler) {
            return Err("bler outside [0, 1]");
        }
        if !self.brate_kbps.is_finite() || self.brate_kbps < 0.0 {
            return Err("brate_kbps negative or not finite");
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("schema error: missing required column `{0}`")]
    MissingColumn(&'static str),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid cleaning policy: {0}")]
    InvalidPolicy(&'static str),
}

/// A data row that could not be converted; the row is skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    /// 1-based line number in the source (the header is line 1).
    pub line: u64,
    pub column: String,
    pub message: String,
}

impl std::fmt::Display for RowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: column `{}`: {}", self.line, self.column, self.message)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParseReport {
    pub records: Vec<MetricRecord>,
    pub rejected: Vec<RowError>,
    /// Number of data rows seen, accepted or not.
    pub rows_read: usize,
}

#[derive(Clone, Copy)]
enum BlerColumn {
    Fraction(usize),
    Percent(usize),
}

struct ColumnMap {
    timestamp_ms: usize,
    ue_id: usize,
    tti: usize,
    mcs: usize,
    snr_db: usize,
    bler: BlerColumn,
    brate_kbps: usize,
    scenario: Option<usize>,
}

impl ColumnMap {
    fn from_header(header: &csv::StringRecord) -> Result<Self, IngestError> {
        let find = |name: &str| {
            header
                .iter()
                .position(|h| h.trim().eq_ignore_ascii_case(name))
        };
        let require = |name: &'static str| find(name).ok_or(IngestError::MissingColumn(name));
        let bler = match (find("bler"), find("bler_pct")) {
            (Some(i), _) => BlerColumn::Fraction(i),
            (None, Some(i)) => BlerColumn::Percent(i),
            (None, None) => return Err(IngestError::MissingColumn("bler")),
        };
        Ok(Self {
            timestamp_ms: require("timestamp_ms")?,
            ue_id: require("ue_id")?,
            tti: require("tti")?,
            mcs: require("mcs")?,
            snr_db: require("snr_db")?,
            bler,
            brate_kbps: require("brate_kbps")?,
            scenario: find("scenario"),
        })
    }
}

fn cell<T: std::str::FromStr>(
    row: &csv::StringRecord,
    idx: usize,
    name: &str,
    line: u64,
) -> Result<T, RowError>
where
    T::Err: std::fmt::Display,
{
    let raw = row.get(idx).ok_or_else(|| RowError {
        line,
        column: name.to_string(),
        message: "missing field".into(),
    })?;
    raw.trim().parse::<T>().map_err(|e| RowError {
        line,
        column: name.to_string(),
        message: format!("cannot parse {raw:?}: {e}"),
    })
}

fn convert_row(row: &csv::StringRecord, cols: &ColumnMap, line: u64) -> Result<MetricRecord, RowError> {
    let (bler, bler_name) = match cols.bler {
        BlerColumn::Fraction(i) => (cell::<f64>(row, i, "bler", line)?, "bler"),
        BlerColumn::Percent(i) => (cell::<f64>(row, i, "bler_pct", line)? / 100.0, "bler_pct"),
    };
    let mcs: i64 = cell(row, cols.mcs, "mcs", line)?;
    let record = MetricRecord {
        timestamp_ms: cell(row, cols.timestamp_ms, "timestamp_ms", line)?,
        ue_id: cell(row, cols.ue_id, "ue_id", line)?,
        tti: cell(row, cols.tti, "tti", line)?,
        mcs: u8::try_from(mcs).unwrap_or(u8::MAX),
        snr_db: cell(row, cols.snr_db, "snr_db", line)?,
        bler,
        brate_kbps: cell(row, cols.brate_kbps, "brate_kbps", line)?,
        scenario: cols
            .scenario
            .and_then(|i| row.get(i))
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string),
    };
    record.validate().map_err(|msg| {
        let column = match msg.split_whitespace().next() {
            Some("bler") => bler_name,
            Some(c) => c,
            None => "",
        };
        RowError {
            line,
            column: column.to_string(),
            message: msg.to_string(),
        }
    })?;
    Ok(record)
}

/// Parses a telemetry CSV stream.
///
/// Rows that fail conversion or violate record invariants are skipped and
/// reported in [`ParseReport::rejected`]. An empty stream yields an empty
/// report.
pub fn parse_metrics_csv<R: Read>(stream: R) -> Result<ParseReport, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(stream);
    let header = reader.headers()?.clone();
    if header.is_empty() {
        return Ok(ParseReport::default());
    }
    let cols = ColumnMap::from_header(&header)?;

    let mut report = ParseReport::default();
    let mut row = csv::StringRecord::new();
    while reader.read_record(&mut row)? {
        report.rows_read += 1;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        match convert_row(&row, &cols, line) {
            Ok(rec) => report.records.push(rec),
            Err(e) => report.rejected.push(e),
        }
    }
    Ok(report)
}

pub const CANONICAL_HEADER: [&str; 8] = [
    "timestamp_ms",
    "ue_id",
    "tti",
    "mcs",
    "snr_db",
    "bler",
    "brate_kbps",
    "scenario",
];

/// Writes records in the canonical column order. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_metrics_csv<W: Write>(records: &[MetricRecord], out: W) -> Result<(), IngestError> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CANONICAL_HEADER)?;
    for r in records {
        writer.write_record([
            r.timestamp_ms.to_string(),
            r.ue_id.to_string(),
            r.tti.to_string(),
            r.mcs.to_string(),
            r.snr_db.to_string(),
            r.bler.to_string(),
            r.brate_kbps.to_string(),
            r.scenario.clone().unwrap_or_default(),
        ])?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct AlignReport {
    pub records: Vec<MetricRecord>,
    pub duplicates: usize,
}

/// Stable-sorts by `(ue_id, timestamp_ms)` and drops duplicate keys, keeping
/// the row that came last in the input.
pub fn align_timestamps(mut records: Vec<MetricRecord>) -> AlignReport {
    records.sort_by_key(|r| (r.ue_id, r.timestamp_ms));
    let before = records.len();
    let mut out: Vec<MetricRecord> = Vec::with_capacity(before);
    for rec in records {
        match out.last_mut() {
            Some(prev) if prev.ue_id == rec.ue_id && prev.timestamp_ms == rec.timestamp_ms => {
                *prev = rec;
            }
            _ => out.push(rec),
        }
    }
    AlignReport {
        duplicates: before - out.len(),
        records: out,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleaningPolicy {
    pub snr_min_db: f64,
    pub snr_max_db: f64,
    pub zscore_cutoff: f64,
    pub drop_zero_brate: bool,
}

impl Default for CleaningPolicy {
    fn default() -> Self {
        Self {
            snr_min_db: -10.0,
            snr_max_db: 40.0,
            zscore_cutoff: 6.0,
            drop_zero_brate: true,
        }
    }
}

impl CleaningPolicy {
    pub fn validate(&self) -> Result<(), IngestError> {
        if !(self.snr_min_db < self.snr_max_db) {
            return Err(IngestError::InvalidPolicy("snr_min_db must be below snr_max_db"));
        }
        if !(self.zscore_cutoff > 0.0) {
            return Err(IngestError::InvalidPolicy("zscore_cutoff must be positive"));
        }
        Ok(())
    }
}

/// Population mean and standard deviation.
fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Range filter followed by a single z-score pass over snr, bit rate and
/// BLER. Statistics for the z-score pass come from the rows that survived the
/// range filter; fields with zero spread are skipped.
pub fn filter_outliers(
    records: Vec<MetricRecord>,
    policy: &CleaningPolicy,
) -> Result<(Vec<MetricRecord>, usize), IngestError> {
    policy.validate()?;
    let input = records.len();
    let in_range: Vec<MetricRecord> = records
        .into_iter()
        .filter(|r| r.snr_db >= policy.snr_min_db && r.snr_db <= policy.snr_max_db)
        .filter(|r| !(policy.drop_zero_brate && r.brate_kbps <= 0.0))
        .collect();
    if in_range.is_empty() {
        return Ok((in_range, input));
    }

    let fields: [fn(&MetricRecord) -> f64; 3] = [|r| r.snr_db, |r| r.brate_kbps, |r| r.bler];
    let stats: Vec<(f64, f64)> = fields
        .iter()
        .map(|f| mean_std(in_range.iter().map(f)))
        .collect();

    let kept: Vec<MetricRecord> = in_range
        .into_iter()
        .filter(|r| {
            fields.iter().zip(&stats).all(|(f, &(mean, std))| {
                std == 0.0 || (f(r) - mean).abs() <= policy.zscore_cutoff * std
            })
        })
        .collect();
    let dropped = input - kept.len();
    Ok((kept, dropped))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "timestamp_ms,ue_id,tti,mcs,snr_db,bler,brate_kbps\n";

    fn rec(ts: i64, ue: u32, brate: f64) -> MetricRecord {
        MetricRecord {
            timestamp_ms: ts,
            ue_id: ue,
            tti: 0,
            mcs: 10,
            snr_db: 12.0,
            bler: 0.1,
            brate_kbps: brate,
            scenario: None,
        }
    }

    #[test]
    fn parses_single_row() {
        let data = format!("{HEADER}1719350000123,1,3214,22,18.5,0.0196,4500.0\n");
        let report = parse_metrics_csv(data.as_bytes()).unwrap();
        assert_eq!(report.records.len(), 1);
        let r = &report.records[0];
        assert_eq!(r.timestamp_ms, 1719350000123);
        assert_eq!(r.ue_id, 1);
        assert_eq!(r.tti, 3214);
        assert_eq!(r.mcs, 22);
        assert_eq!(r.snr_db, 18.5);
        assert_eq!(r.bler, 0.0196);
        assert_eq!(r.brate_kbps, 4500.0);
        assert_eq!(r.scenario, None);
    }

    #[test]
    fn header_only_and_empty_stream() {
        assert!(parse_metrics_csv(HEADER.as_bytes()).unwrap().records.is_empty());
        let empty = parse_metrics_csv("".as_bytes()).unwrap();
        assert!(empty.records.is_empty());
        assert_eq!(empty.rows_read, 0);
    }

    #[test]
    fn bad_cell_rejects_row_only() {
        let data = format!(
            "{HEADER}1,1,1,22,18.5,abc,4500.0\n2,1,2,22,18.5,0.1,4500.0\n3,1,3,22,18.5,0.2,4000.0\n"
        );
        let report = parse_metrics_csv(data.as_bytes()).unwrap();
        assert_eq!(report.records.len(), 2);
        assert_eq!(report.rejected.len(), 1);
        assert_eq!(report.rejected[0].line, 2);
        assert_eq!(report.rejected[0].column, "bler");
        assert_eq!(report.rows_read, 3);
    }

    #[test]
    fn missing_column_is_schema_error() {
        let data = "timestamp_ms,ue_id,tti,mcs,bler,brate_kbps\n1,1,1,1,0.1,1\n";
        match parse_metrics_csv(data.as_bytes()) {
            Err(IngestError::MissingColumn(c)) => assert_eq!(c, "snr_db"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn header_any_order_case_insensitive_with_extras() {
        let data = "Scenario,BRATE_KBPS,extra,bler,snr_db,MCS,tti,ue_id,timestamp_ms\n\
                    indoor-static-udp,4500,zzz,0.02,18.5,22,10,3,99\n";
        let r = &parse_metrics_csv(data.as_bytes()).unwrap().records[0];
        assert_eq!(r.ue_id, 3);
        assert_eq!(r.timestamp_ms, 99);
        assert_eq!(r.brate_kbps, 4500.0);
        assert_eq!(r.scenario.as_deref(), Some("indoor-static-udp"));
    }

    #[test]
    fn bler_pct_is_scaled() {
        let data = "timestamp_ms,ue_id,tti,mcs,snr_db,bler_pct,brate_kbps\n1,1,1,5,3.0,2.5,100\n";
        let r = &parse_metrics_csv(data.as_bytes()).unwrap().records[0];
        assert_eq!(r.bler, 0.025);
    }

    #[test]
    fn invariant_violations_are_row_errors() {
        let data = format!("{HEADER}1,1,1,29,1.0,0.1,1\n2,1,1,3,1.0,1.5,1\n3,1,1,3,1.0,0.1,-4\n");
        let report = parse_metrics_csv(data.as_bytes()).unwrap();
        assert!(report.records.is_empty());
        let cols: Vec<_> = report.rejected.iter().map(|e| e.column.as_str()).collect();
        assert_eq!(cols, ["mcs", "bler", "brate_kbps"]);
    }

    #[test]
    fn align_sorts() {
        let out = align_timestamps(vec![rec(200, 1, 1.0), rec(100, 1, 2.0)]);
        let ts: Vec<_> = out.records.iter().map(|r| r.timestamp_ms).collect();
        assert_eq!(ts, [100, 200]);
        assert_eq!(out.duplicates, 0);
    }

    #[test]
    fn align_identity_on_sorted() {
        let input = vec![rec(1, 1, 1.0), rec(2, 1, 1.0), rec(1, 2, 1.0)];
        assert_eq!(align_timestamps(input.clone()).records, input);
    }

    #[test]
    fn align_keeps_last_duplicate() {
        let out = align_timestamps(vec![rec(5, 1, 1.0), rec(5, 1, 2.0)]);
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].brate_kbps, 2.0);
        assert_eq!(out.duplicates, 1);
    }

    #[test]
    fn align_empty() {
        assert!(align_timestamps(Vec::new()).records.is_empty());
    }

    #[test]
    fn snr_out_of_range_dropped() {
        let mut bad = rec(1, 1, 4500.0);
        bad.snr_db = 55.0;
        let (kept, dropped) =
            filter_outliers(vec![bad, rec(2, 1, 4500.0)], &CleaningPolicy::default()).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(dropped, 1);
    }

    #[test]
    fn zero_brate_dropped_only_when_enabled() {
        let rows = vec![rec(1, 1, 0.0), rec(2, 1, 10.0)];
        let (kept, _) = filter_outliers(rows.clone(), &CleaningPolicy::default()).unwrap();
        assert_eq!(kept.len(), 1);
        let keep_zero = CleaningPolicy {
            drop_zero_brate: false,
            ..Default::default()
        };
        assert_eq!(filter_outliers(rows, &keep_zero).unwrap().0.len(), 2);
    }

    #[test]
    fn identical_records_all_kept() {
        let rows: Vec<_> = (0..100).map(|i| rec(i, 1, 4500.0)).collect();
        let (kept, dropped) = filter_outliers(rows, &CleaningPolicy::default()).unwrap();
        assert_eq!(kept.len(), 100);
        assert_eq!(dropped, 0);
    }

    #[test]
    fn single_extreme_brate_dropped() {
        // 99 rows alternating 4490/4510: mean 4500 + 10/99, population std just under 10.
        let base: Vec<f64> = (0..99).map(|i| if i % 2 == 0 { 4490.0 } else { 4510.0 }).collect();
        let n = base.len() as f64;
        let mean = base.iter().sum::<f64>() / n;
        let std = (base.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let spike = 10.0 * (mean + 10.0 * std);

        // Recompute the z-score of every row over all 100 values by hand.
        let mut all = base.clone();
        all.push(spike);
        let m100 = all.iter().sum::<f64>() / 100.0;
        let s100 = (all.iter().map(|v| (v - m100).powi(2)).sum::<f64>() / 100.0).sqrt();
        assert!((spike - m100) / s100 > 6.0);
        assert!(base.iter().all(|v| ((v - m100) / s100).abs() <= 6.0));

        let mut rows: Vec<_> = base.iter().enumerate().map(|(i, &b)| rec(i as i64, 1, b)).collect();
        rows.push(rec(1000, 1, spike));
        let (kept, dropped) = filter_outliers(rows, &CleaningPolicy::default()).unwrap();
        assert_eq!(dropped, 1);
        assert!(kept.iter().all(|r| r.brate_kbps != spike));
    }

    #[test]
    fn invalid_policy_rejected() {
        let p = CleaningPolicy {
            snr_min_db: 5.0,
            snr_max_db: 5.0,
            ..Default::default()
        };
        assert!(filter_outliers(Vec::new(), &p).is_err());
        let p = CleaningPolicy {
            zscore_cutoff: 0.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }
}
