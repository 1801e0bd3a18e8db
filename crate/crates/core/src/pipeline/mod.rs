//! File-level commands behind the CLI: synth, train, evaluate, importance and
//! report. Every artifact is a pure function of the config and input file, so
//! reruns are byte-identical.
//!
//! Output directory layout:
//!
//! ```text
//! <out>/models/<kind>.json     trained model
//! <out>/scaler.json            z-score parameters fitted on the train rows
//! <out>/train_summary.csv      model,train_mse
//! <out>/comparison.csv         model,mse,rmse,r2
//! <out>/scatter_<kind>.csv     actual,predicted
//! <out>/error_hist_<kind>.csv  bin_left,bin_right,count
//! <out>/importance_<kind>.csv  feature,total_gain,share (tree-based models)
//! <out>/report.md
//! ```

mod config;
mod report;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use log::{info, warn};
use thiserror::Error;

pub use config::{Partition, RunConfig};
pub use report::{expected_report_inputs, render_report};

use crate::dataset::{build_task, fit_scaler, split_with, DatasetError, FeatureMatrix, Scaler, TargetVector};
use crate::importance::{gain_importance, ImportanceError, ImportanceReport};
use crate::ingest::{align_timestamps, filter_outliers, parse_metrics_csv, write_metrics_csv, IngestError};
use crate::metrics::{error_histogram, evaluate, mse, EvalResult, MetricsError};
use crate::regressors::{
    deserialize_model, fit_boosted_leafwise, fit_boosted_second_order, fit_forest, fit_linear, fit_tree, predict,
    serialize_model, Model, ModelError, ModelKind,
};
use crate::synthgen::{generate, GenError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("data error: {0}")]
    Data(#[from] DatasetError),
    #[error("I/O error on {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("model error: {0}")]
    Model(String),
    #[error("{0}")]
    Mismatch(String),
    #[error("missing input files: {}", .0.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    MissingInputs(Vec<PathBuf>),
}

impl PipelineError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit status: 2 config, 3 parse or data, 4 I/O, 5 model.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Parse(_) | Self::Data(_) => 3,
            Self::Io { .. } | Self::MissingInputs(_) => 4,
            Self::Model(_) | Self::Mismatch(_) => 5,
        }
    }
}

impl From<ModelError> for PipelineError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Decode(_) | ModelError::UnsupportedVersion(_) => Self::Parse(e.to_string()),
            _ => Self::Model(e.to_string()),
        }
    }
}

impl From<MetricsError> for PipelineError {
    fn from(e: MetricsError) -> Self {
        Self::Model(e.to_string())
    }
}

impl From<ImportanceError> for PipelineError {
    fn from(e: ImportanceError) -> Self {
        Self::Model(e.to_string())
    }
}

impl From<GenError> for PipelineError {
    fn from(e: GenError) -> Self {
        Self::Config(e.to_string())
    }
}

fn ingest_error(path: &Path, e: IngestError) -> PipelineError {
    match e {
        IngestError::InvalidPolicy(_) => PipelineError::Config(e.to_string()),
        IngestError::Csv(c) if c.is_io_error() => match c.into_kind() {
            csv::ErrorKind::Io(source) => PipelineError::io(path, source),
            other => PipelineError::Parse(format!("{}: {other:?}", path.display())),
        },
        other => PipelineError::Parse(format!("{}: {other}", path.display())),
    }
}

pub fn model_path(out: &Path, kind: ModelKind) -> PathBuf {
    out.join("models").join(format!("{kind}.json"))
}

pub fn scaler_path(out: &Path) -> PathBuf {
    out.join("scaler.json")
}

pub fn scatter_path(out: &Path, kind: ModelKind) -> PathBuf {
    out.join(format!("scatter_{kind}.csv"))
}

pub fn error_hist_path(out: &Path, kind: ModelKind) -> PathBuf {
    out.join(format!("error_hist_{kind}.csv"))
}

pub fn importance_path(out: &Path, kind: ModelKind) -> PathBuf {
    out.join(format!("importance_{kind}.csv"))
}

pub const COMPARISON_FILE: &str = "comparison.csv";
pub const TRAIN_SUMMARY_FILE: &str = "train_summary.csv";
pub const REPORT_FILE: &str = "report.md";

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| PipelineError::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| PipelineError::io(path, e))
}

pub(crate) fn read_file(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))
}

fn csv_bytes<I, R>(header: &[&str], rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for row in rows {
        w.write_record(row).expect("writing to memory");
    }
    w.into_inner().expect("flushing to memory")
}

pub struct SynthSummary {
    pub n_records: usize,
}

/// Generates synthetic telemetry and writes it as canonical CSV.
pub fn cmd_synth(cfg: &RunConfig, out_csv: &Path) -> Result<SynthSummary, PipelineError> {
    let records = generate(&cfg.gen_config())?;
    if records.is_empty() {
        warn!("n_samples = 0, writing a header-only file");
    }
    let mut buf = Vec::new();
    write_metrics_csv(&records, &mut buf).map_err(|e| ingest_error(out_csv, e))?;
    write_file(out_csv, &buf)?;
    info!("wrote {} records to {}", records.len(), out_csv.display());
    Ok(SynthSummary {
        n_records: records.len(),
    })
}

/// Cleaned train/test partition for a config, in raw feature units.
pub struct Prepared {
    pub x_train: FeatureMatrix,
    pub y_train: TargetVector,
    pub x_test: FeatureMatrix,
    pub y_test: TargetVector,
    pub scaler: Scaler,
    pub rows_read: usize,
    pub rejected: usize,
    pub duplicates: usize,
    pub outliers: usize,
}

/// Ingest, align, clean, build the task and split. The scaler is fitted on
/// the train rows but not applied.
pub fn prepare(cfg: &RunConfig) -> Result<Prepared, PipelineError> {
    cfg.validate()?;
    let input = cfg
        .input
        .as_deref()
        .ok_or_else(|| PipelineError::Config("no input file given".into()))?;
    let file = fs::File::open(input).map_err(|e| PipelineError::io(input, e))?;
    let parsed = parse_metrics_csv(io::BufReader::new(file)).map_err(|e| ingest_error(input, e))?;
    for r in parsed.rejected.iter().take(5) {
        warn!("{}: skipped {r}", input.display());
    }
    if parsed.rejected.len() > 5 {
        warn!("{}: {} rows skipped in total", input.display(), parsed.rejected.len());
    }
    let aligned = align_timestamps(parsed.records);
    let (records, outliers) =
        filter_outliers(aligned.records, &cfg.cleaning_policy()).map_err(|e| ingest_error(input, e))?;
    info!(
        "{} rows read, {} rejected, {} duplicates, {} outliers, {} kept",
        parsed.rows_read,
        parsed.rejected.len(),
        aligned.duplicates,
        outliers,
        records.len()
    );
    let (x, y) = build_task(&records, &cfg.task_spec()?)?;
    let split = split_with(&x, &y, cfg.train_fraction, cfg.seed, cfg.temporal_split)?;
    let scaler = fit_scaler(&split.x_train)?;
    Ok(Prepared {
        x_train: split.x_train,
        y_train: split.y_train,
        x_test: split.x_test,
        y_test: split.y_test,
        scaler,
        rows_read: parsed.rows_read,
        rejected: parsed.rejected.len(),
        duplicates: aligned.duplicates,
        outliers,
    })
}

pub fn fit_model(kind: ModelKind, cfg: &RunConfig, x: &FeatureMatrix, y: &TargetVector) -> Result<Model, PipelineError> {
    let model = match kind {
        ModelKind::Linear => Model::Linear(fit_linear(x, y)?),
        ModelKind::Tree => Model::Tree(fit_tree(x, y, &cfg.tree_params()?)?),
        ModelKind::Forest => Model::Forest(fit_forest(x, y, &cfg.forest_params()?)?),
        ModelKind::XgbLike => Model::Boosted(fit_boosted_second_order(x, y, &cfg.second_order_params()?)?),
        ModelKind::LgbmLike => Model::Boosted(fit_boosted_leafwise(x, y, &cfg.leafwise_params()?)?),
    };
    Ok(model)
}

pub struct TrainedModel {
    pub kind: ModelKind,
    pub train_mse: f64,
    pub wall_time: Duration,
}

pub struct TrainSummary {
    pub n_train: usize,
    pub n_test: usize,
    pub models: Vec<TrainedModel>,
}

/// Fits every selected model and writes model files, the scaler and the
/// training summary. Wall times are returned but not persisted, so the files
/// stay reproducible.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainSummary, PipelineError> {
    let data = prepare(cfg)?;
    let scaler_json = serde_json::to_string(&data.scaler).expect("scaler serializes");
    write_file(&scaler_path(&cfg.out), scaler_json.as_bytes())?;

    let x_train = data.scaler.transform(&data.x_train)?;

    let mut models = Vec::with_capacity(cfg.models.len());
    for &kind in &cfg.models {
        let start = Instant::now();
        let model = fit_model(kind, cfg, &x_train, &data.y_train)?;
        let wall_time = start.elapsed();
        let fitted = predict(&model, &x_train)?;
        let train_mse = mse(&data.y_train.values, &fitted.values)?;
        write_file(&model_path(&cfg.out, kind), serialize_model(&model).as_bytes())?;
        info!("trained {kind} in {:.3}s, train mse {train_mse}", wall_time.as_secs_f64());
        models.push(TrainedModel {
            kind,
            train_mse,
            wall_time,
        });
    }
    let summary = csv_bytes(
        &["model", "train_mse"],
        models.iter().map(|m| [m.kind.to_string(), m.train_mse.to_string()]),
    );
    write_file(&cfg.out.join(TRAIN_SUMMARY_FILE), &summary)?;
    Ok(TrainSummary {
        n_train: data.x_train.n_rows(),
        n_test: data.x_test.n_rows(),
        models,
    })
}

pub fn load_model(path: &Path) -> Result<Model, PipelineError> {
    deserialize_model(&read_file(path)?).map_err(|e| match PipelineError::from(e) {
        PipelineError::Parse(msg) => PipelineError::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn load_scaler(path: &Path) -> Result<Scaler, PipelineError> {
    serde_json::from_str(&read_file(path)?).map_err(|e| PipelineError::Parse(format!("{}: {e}", path.display())))
}

pub struct ModelEvaluation {
    pub kind: ModelKind,
    pub result: EvalResult,
    pub importance: Option<ImportanceReport>,
}

/// Scores saved models on the partition rebuilt from `(seed, train_fraction)`.
pub fn cmd_evaluate(cfg: &RunConfig) -> Result<Vec<ModelEvaluation>, PipelineError> {
    let out = &cfg.out;
    let saved = load_scaler(&scaler_path(out))?;
    let data = prepare(cfg)?;
    if saved.feature_names != data.scaler.feature_names {
        return Err(PipelineError::Mismatch(format!(
            "scaler columns {:?} do not match task columns {:?}",
            saved.feature_names, data.scaler.feature_names
        )));
    }
    if saved != data.scaler {
        warn!("saved scaler differs from one refitted on this input; using the saved one");
    }
    let (x_raw, y) = match cfg.eval_partition {
        Partition::Test => (&data.x_test, &data.y_test),
        Partition::Train => (&data.x_train, &data.y_train),
    };
    let x = saved.transform(x_raw)?;

    let mut results = Vec::with_capacity(cfg.models.len());
    for &kind in &cfg.models {
        let path = model_path(out, kind);
        let model = load_model(&path)?;
        if model.kind() != kind {
            return Err(PipelineError::Mismatch(format!(
                "{} holds a {} model, expected {kind}",
                path.display(),
                model.kind()
            )));
        }
        if model.feature_names() != saved.feature_names.as_slice() {
            return Err(PipelineError::Mismatch(format!(
                "model columns {:?} do not match scaler columns {:?}",
                model.feature_names(),
                saved.feature_names
            )));
        }
        let y_hat = predict(&model, &x)?;
        let result = evaluate(&y.values, &y_hat.values)?;
        let scatter = csv_bytes(
            &["actual", "predicted"],
            y.values.iter().zip(&y_hat.values).map(|(a, p)| [a.to_string(), p.to_string()]),
        );
        write_file(&scatter_path(out, kind), &scatter)?;
        let hist = error_histogram(&y.values, &y_hat.values, cfg.error_bins)?;
        let hist_csv = csv_bytes(
            &["bin_left", "bin_right", "count"],
            hist.bins().map(|(l, r, c)| [l.to_string(), r.to_string(), c.to_string()]),
        );
        write_file(&error_hist_path(out, kind), &hist_csv)?;
        let importance = if kind.is_tree_based() {
            let report = gain_importance(&model)?;
            write_file(&importance_path(out, kind), &importance_csv(&report))?;
            Some(report)
        } else {
            None
        };
        info!("{kind}: mse {} rmse {} r2 {}", result.mse, result.rmse, result.r2);
        results.push(ModelEvaluation {
            kind,
            result,
            importance,
        });
    }
    let comparison = csv_bytes(
        &["model", "mse", "rmse", "r2"],
        results.iter().map(|e| {
            [
                e.kind.to_string(),
                e.result.mse.to_string(),
                e.result.rmse.to_string(),
                e.result.r2.to_string(),
            ]
        }),
    );
    write_file(&out.join(COMPARISON_FILE), &comparison)?;
    Ok(results)
}

/// Rows sorted by share, largest first.
pub fn importance_csv(report: &ImportanceReport) -> Vec<u8> {
    csv_bytes(
        &["feature", "total_gain", "share"],
        report
            .ranked()
            .into_iter()
            .map(|f| [f.name.clone(), f.total_gain.to_string(), f.share.to_string()]),
    )
}

/// Gain importance of a saved model, written as CSV.
pub fn cmd_importance(model_file: &Path, out_csv: &Path) -> Result<ImportanceReport, PipelineError> {
    let model = load_model(model_file)?;
    let report = gain_importance(&model)?;
    if !report.has_splits {
        warn!("{} has no splits; every share is 0", model_file.display());
    }
    write_file(out_csv, &importance_csv(&report))?;
    Ok(report)
}

/// Writes `report.md` from the evaluate outputs in `cfg.out`.
pub fn cmd_report(cfg: &RunConfig) -> Result<PathBuf, PipelineError> {
    let text = render_report(&cfg.out, &cfg.models)?;
    let path = cfg.out.join(REPORT_FILE);
    write_file(&path, text.as_bytes())?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_distinct() {
        let codes = [
            PipelineError::Config(String::new()).exit_code(),
            PipelineError::Parse(String::new()).exit_code(),
            PipelineError::io(Path::new("x"), io::Error::other("x")).exit_code(),
            PipelineError::Model(String::new()).exit_code(),
        ];
        assert_eq!(codes, [2, 3, 4, 5]);
    }
}
