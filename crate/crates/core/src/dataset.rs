//! Feature matrices, train/test partitioning and z-score scaling.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::MetricRecord;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("unknown feature or target name `{0}`")]
    UnknownField(String),
    #[error("target `{0}` also listed as a feature")]
    TargetInFeatures(String),
    #[error("no records to build a task from")]
    NoRecords,
    #[error("matrix has {got} columns, expected {expected}")]
    ColumnMismatch { expected: usize, got: usize },
    #[error("{0} rows given, {1} target values")]
    RowMismatch(usize, usize),
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("need at least one row")]
    Empty,
    #[error("train fraction must be in (0, 1), got {0}")]
    BadFraction(f64),
    #[error("cannot split {n} rows with fraction {fraction}: a partition would be empty")]
    TooFewRows { n: usize, fraction: f64 },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Row-major numeric design matrix with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    column_names: Vec<String>,
    values: Vec<f64>,
    n_rows: usize,
}

impl FeatureMatrix {
    /// Builds a matrix from row slices. All rows must have one entry per
    /// column name and every entry must be finite.
    pub fn from_rows(column_names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self, DatasetError> {
        let n_cols = column_names.len();
        let mut values = Vec::with_capacity(rows.len() * n_cols);
        for row in rows {
            if row.len() != n_cols {
                return Err(DatasetError::ColumnMismatch {
                    expected: n_cols,
                    got: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::from_flat(column_names, values)
    }

    pub fn from_flat(column_names: Vec<String>, values: Vec<f64>) -> Result<Self, DatasetError> {
        let n_cols = column_names.len();
        if n_cols == 0 {
            return Err(DatasetError::ColumnMismatch { expected: 1, got: 0 });
        }
        if !values.len().is_multiple_of(n_cols) {
            return Err(DatasetError::ColumnMismatch {
                expected: n_cols,
                got: values.len() % n_cols,
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(DatasetError::NonFinite {
                row: i / n_cols,
                col: i % n_cols,
            });
        }
        Ok(Self {
            n_rows: values.len() / n_cols,
            column_names,
            values,
        })
    }

    /// Unnamed columns `x0, x1, ...`; convenient for fixtures.
    pub fn unnamed(rows: &[Vec<f64>]) -> Result<Self, DatasetError> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let names = (0..n_cols).map(|j| format!("x{j}")).collect();
        Self::from_rows(names, rows)
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.n_cols();
        &self.values[i * c..(i + 1) * c]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols() + col]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_cols())
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows().map(move |r| r[col])
    }

    /// Column-major copy of the values.
    pub fn to_columns(&self) -> Vec<Vec<f64>> {
        (0..self.n_cols()).map(|j| self.column(j).collect()).collect()
    }

    /// New matrix holding the given rows in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.n_cols());
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self {
            column_names: self.column_names.clone(),
            n_rows: indices.len(),
            values,
        }
    }

    pub fn write_csv<W: Write>(&self, target: Option<&TargetVector>, out: W) -> Result<(), DatasetError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.column_names.iter().map(String::as_str).collect();
        if let Some(t) = target {
            header.push(&t.name);
        }
        w.write_record(&header)?;
        for (i, row) in self.rows().enumerate() {
            let mut cells: Vec<String> = row.iter().map(f64::to_string).collect();
            if let Some(t) = target {
                cells.push(t.values[i].to_string());
            }
            w.write_record(&cells)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetVector {
    pub name: String,
    pub values: Vec<f64>,
}

impl TargetVector {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self, DatasetError> {
        if let Some(row) = values.iter().position(|v| !v.is_finite()) {
            return Err(DatasetError::NonFinite { row, col: 0 });
        }
        Ok(Self {
            name: name.into(),
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            name: self.name.clone(),
            values: indices.iter().map(|&i| self.values[i]).collect(),
        }
    }
}

/// A numeric column of [`MetricRecord`] usable as feature or target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Bler,
    Tti,
    Mcs,
    /// Channel quality slot; `cqi` resolves here as well.
    Snr,
    Brate,
}

impl Field {
    pub fn parse(name: &str) -> Result<Self, DatasetError> {
        match name.trim().to_ascii_lowercase().as_str() {
            "bler" | "bler_pct" => Ok(Self::Bler),
            "tti" => Ok(Self::Tti),
            "mcs" => Ok(Self::Mcs),
            "snr" | "snr_db" | "cqi" => Ok(Self::Snr),
            "brate" | "brate_kbps" | "bitrate" => Ok(Self::Brate),
            _ => Err(DatasetError::UnknownField(name.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Bler => "bler",
            Self::Tti => "tti",
            Self::Mcs => "mcs",
            Self::Snr => "snr",
            Self::Brate => "brate",
        }
    }

    pub fn extract(self, r: &MetricRecord) -> f64 {
        match self {
            Self::Bler => r.bler,
            Self::Tti => r.tti as f64,
            Self::Mcs => f64::from(r.mcs),
            Self::Snr => r.snr_db,
            Self::Brate => r.brate_kbps,
        }
    }
}

impl std::fmt::Display for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Prediction target of a task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Brate,
    Snr,
}

impl Target {
    pub fn field(self) -> Field {
        match self {
            Self::Brate => Field::Brate,
            Self::Snr => Field::Snr,
        }
    }

    pub fn default_features(self) -> Vec<Field> {
        match self {
            Self::Brate => vec![Field::Bler, Field::Tti, Field::Mcs, Field::Snr],
            Self::Snr => vec![Field::Brate, Field::Tti, Field::Mcs, Field::Bler],
        }
    }
}

impl std::str::FromStr for Target {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match Field::parse(s)? {
            Field::Brate => Ok(Self::Brate),
            Field::Snr => Ok(Self::Snr),
            _ => Err(DatasetError::UnknownField(s.to_string())),
        }
    }
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.field().name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub target: Target,
    pub features: Vec<Field>,
}

impl TaskSpec {
    pub fn new(target: Target) -> Self {
        Self {
            target,
            features: target.default_features(),
        }
    }

    /// Resolves feature names (aliases allowed) against the record fields.
    pub fn with_feature_names(target: Target, names: &[&str]) -> Result<Self, DatasetError> {
        let features = names.iter().map(|n| Field::parse(n)).collect::<Result<_, _>>()?;
        let spec = Self { target, features };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.features.contains(&self.target.field()) {
            return Err(DatasetError::TargetInFeatures(self.target.to_string()));
        }
        Ok(())
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name().to_string()).collect()
    }
}

/// Extracts the design matrix and target for a task, one row per record.
pub fn build_task(
    records: &[MetricRecord],
    spec: &TaskSpec,
) -> Result<(FeatureMatrix, TargetVector), DatasetError> {
    spec.validate()?;
    if records.is_empty() {
        return Err(DatasetError::NoRecords);
    }
    let values = records
        .iter()
        .flat_map(|r| spec.features.iter().map(move |f| f.extract(r)))
        .collect();
    let x = FeatureMatrix::from_flat(spec.feature_names(), values)?;
    let target_field = spec.target.field();
    let y = TargetVector::new(
        target_field.name(),
        records.iter().map(|r| target_field.extract(r)).collect(),
    )?;
    Ok((x, y))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Row partition: seeded Fisher-Yates shuffle, or the original order when
/// `temporal` is set; the first `floor(fraction * n)` rows go to train.
pub fn split_indices(
    n: usize,
    train_fraction: f64,
    seed: u64,
    temporal: bool,
) -> Result<SplitIndices, DatasetError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatasetError::BadFraction(train_fraction));
    }
    let n_train = (train_fraction * n as f64).floor() as usize;
    if n < 2 || n_train == 0 || n_train == n {
        return Err(DatasetError::TooFewRows {
            n,
            fraction: train_fraction,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    if !temporal {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
    }
    let test = order.split_off(n_train);
    Ok(SplitIndices { train: order, test })
}

#[derive(Debug, Clone)]
pub struct TrainTest {
    pub x_train: FeatureMatrix,
    pub y_train: TargetVector,
    pub x_test: FeatureMatrix,
    pub y_test: TargetVector,
}

pub fn split_train_test(
    x: &FeatureMatrix,
    y: &TargetVector,
    train_fraction: f64,
    seed: u64,
) -> Result<TrainTest, DatasetError> {
    split_with(x, y, train_fraction, seed, false)
}

pub fn split_with(
    x: &FeatureMatrix,
    y: &TargetVector,
    train_fraction: f64,
    seed: u64,
    temporal: bool,
) -> Result<TrainTest, DatasetError> {
    if x.n_rows() != y.len() {
        return Err(DatasetError::RowMismatch(x.n_rows(), y.len()));
    }
    let idx = split_indices(x.n_rows(), train_fraction, seed, temporal)?;
    Ok(TrainTest {
        x_train: x.select_rows(&idx.train),
        y_train: y.select(&idx.train),
        x_test: x.select_rows(&idx.test),
        y_test: y.select(&idx.test),
    })
}

/// Per-column z-score parameters (population standard deviation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub feature_names: Vec<String>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

pub fn fit_scaler(x_train: &FeatureMatrix) -> Result<Scaler, DatasetError> {
    if x_train.n_rows() == 0 {
        return Err(DatasetError::Empty);
    }
    let n = x_train.n_rows() as f64;
    let mut means = Vec::with_capacity(x_train.n_cols());
    let mut stds = Vec::with_capacity(x_train.n_cols());
    for j in 0..x_train.n_cols() {
        let mean = crate::numeric::stable_mean(x_train.column(j));
        let var = x_train.column(j).map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        means.push(mean);
        stds.push(var.sqrt());
    }
    Ok(Scaler {
        feature_names: x_train.column_names().to_vec(),
        means,
        stds,
    })
}

impl Scaler {
    pub fn n_features(&self) -> usize {
        self.means.len()
    }

    pub fn transform(&self, x: &FeatureMatrix) -> Result<FeatureMatrix, DatasetError> {
        transform(self, x)
    }
}

/// `(x - mean) / std` per cell; zero-spread columns map to 0.
pub fn transform(scaler: &Scaler, x: &FeatureMatrix) -> Result<FeatureMatrix, DatasetError> {
    if x.n_cols() != scaler.n_features() {
        return Err(DatasetError::ColumnMismatch {
            expected: scaler.n_features(),
            got: x.n_cols(),
        });
    }
    let values = x
        .rows()
        .flat_map(|row| {
            row.iter()
                .zip(scaler.means.iter().zip(&scaler.stds))
                .map(|(&v, (&m, &s))| if s == 0.0 { 0.0 } else { (v - m) / s })
        })
        .collect();
    Ok(FeatureMatrix {
        column_names: x.column_names.clone(),
        values,
        n_rows: x.n_rows(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> MetricRecord {
        MetricRecord {
            timestamp_ms: 0,
            ue_id: 1,
            tti: 10,
            mcs: 22,
            snr_db: 18.5,
            bler: 0.02,
            brate_kbps: 4500.0,
            scenario: None,
        }
    }

    #[test]
    fn brate_task_columns() {
        let (x, y) = build_task(&[record()], &TaskSpec::new(Target::Brate)).unwrap();
        assert_eq!(x.row(0), &[0.02, 10.0, 22.0, 18.5]);
        assert_eq!(y.values, [4500.0]);
        assert_eq!(x.column_names(), ["bler", "tti", "mcs", "snr"]);
    }

    #[test]
    fn snr_task_columns() {
        let (x, y) = build_task(&[record()], &TaskSpec::new(Target::Snr)).unwrap();
        assert_eq!(x.row(0), &[4500.0, 10.0, 22.0, 0.02]);
        assert_eq!(y.values, [18.5]);
    }

    #[test]
    fn empty_records_error() {
        assert!(matches!(
            build_task(&[], &TaskSpec::new(Target::Brate)),
            Err(DatasetError::NoRecords)
        ));
    }

    #[test]
    fn cqi_alias_and_bad_names() {
        let spec = TaskSpec::with_feature_names(Target::Brate, &["BLER", "tti", "mcs", "cqi"]).unwrap();
        assert_eq!(spec, TaskSpec::new(Target::Brate));
        assert!(matches!(
            TaskSpec::with_feature_names(Target::Brate, &["rsrp"]),
            Err(DatasetError::UnknownField(_))
        ));
        assert!(matches!(
            TaskSpec::with_feature_names(Target::Snr, &["mcs", "snr_db"]),
            Err(DatasetError::TargetInFeatures(_))
        ));
    }

    fn fixture(n: usize) -> (FeatureMatrix, TargetVector) {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        let y = TargetVector::new("y", (0..n).map(|i| i as f64 * 10.0).collect()).unwrap();
        (FeatureMatrix::unnamed(&rows).unwrap(), y)
    }

    #[test]
    fn split_sizes() {
        let (x, y) = fixture(10);
        let s = split_train_test(&x, &y, 0.8, 7).unwrap();
        assert_eq!((s.x_train.n_rows(), s.x_test.n_rows()), (8, 2));
        let (x, y) = fixture(5);
        let s = split_train_test(&x, &y, 0.5, 7).unwrap();
        assert_eq!((s.x_train.n_rows(), s.x_test.n_rows()), (2, 3));
    }

    #[test]
    fn split_keeps_rows_aligned_and_deterministic() {
        let (x, y) = fixture(50);
        let a = split_train_test(&x, &y, 0.8, 42).unwrap();
        let b = split_train_test(&x, &y, 0.8, 42).unwrap();
        assert_eq!(a.x_train, b.x_train);
        assert_eq!(a.y_test, b.y_test);
        for (row, &t) in a.x_train.rows().zip(&a.y_train.values) {
            assert_eq!(row[0] * 10.0, t);
        }
    }

    #[test]
    fn split_seeds_differ() {
        // Seeds 1 and 2 give different permutations of these 10 rows (checked once, frozen).
        let a = split_indices(10, 0.8, 1, false).unwrap();
        let b = split_indices(10, 0.8, 2, false).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn temporal_split_preserves_order() {
        let s = split_indices(10, 0.8, 99, true).unwrap();
        assert_eq!(s.train, (0..8).collect::<Vec<_>>());
        assert_eq!(s.test, [8, 9]);
    }

    #[test]
    fn split_errors() {
        assert!(split_indices(1, 0.8, 0, false).is_err());
        assert!(split_indices(10, 1.0, 0, false).is_err());
        assert!(split_indices(10, 0.0, 0, false).is_err());
        assert!(split_indices(2, 0.1, 0, false).is_err());
    }

    #[test]
    fn scaler_values() {
        let x = FeatureMatrix::unnamed(&[vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]]).unwrap();
        let s = fit_scaler(&x).unwrap();
        assert_eq!(s.means, [2.0, 5.0]);
        assert!((s.stds[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((s.stds[0] - 0.816497).abs() < 1e-6);
        assert_eq!(s.stds[1], 0.0);

        let probe = FeatureMatrix::unnamed(&[vec![3.0, 123.0], vec![2.0, -1.0]]).unwrap();
        let t = s.transform(&probe).unwrap();
        assert!((t.get(0, 0) - 1.224745).abs() < 1e-6);
        assert_eq!(t.get(1, 0), 0.0);
        assert_eq!(t.get(0, 1), 0.0);
        assert_eq!(t.get(1, 1), 0.0);
    }

    #[test]
    fn scaler_columns_independent() {
        let a = FeatureMatrix::unnamed(&[vec![1.0, 10.0], vec![3.0, 30.0]]).unwrap();
        let b = FeatureMatrix::unnamed(&[vec![1.0, 0.0], vec![3.0, 100.0]]).unwrap();
        let (sa, sb) = (fit_scaler(&a).unwrap(), fit_scaler(&b).unwrap());
        assert_eq!((sa.means[0], sa.stds[0]), (sb.means[0], sb.stds[0]));
    }

    #[test]
    fn transform_column_mismatch() {
        let s = fit_scaler(&FeatureMatrix::unnamed(&[vec![1.0]]).unwrap()).unwrap();
        let x = FeatureMatrix::unnamed(&[vec![1.0, 2.0]]).unwrap();
        assert!(matches!(s.transform(&x), Err(DatasetError::ColumnMismatch { .. })));
    }

    #[test]
    fn scaler_fit_on_train_only_differs_from_full() {
        let (x, y) = fixture(20);
        let s = split_train_test(&x, &y, 0.8, 3).unwrap();
        let train_only = fit_scaler(&s.x_train).unwrap();
        let full = fit_scaler(&x).unwrap();
        let test_mean = s.x_test.column(0).sum::<f64>() / s.x_test.n_rows() as f64;
        assert_ne!(test_mean, train_only.means[0]);
        assert_ne!(train_only.means, full.means);
    }

    #[test]
    fn matrix_rejects_nan() {
        assert!(matches!(
            FeatureMatrix::unnamed(&[vec![1.0], vec![f64::NAN]]),
            Err(DatasetError::NonFinite { row: 1, col: 0 })
        ));
    }
}
