//! Markdown summary of an evaluated run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{error_hist_path, importance_path, read_file, scatter_path, PipelineError, COMPARISON_FILE};
use crate::regressors::ModelKind;

/// Files `render_report` reads for the given models, in a fixed order.
pub fn expected_report_inputs(out: &Path, models: &[ModelKind]) -> Vec<PathBuf> {
    let mut files = vec![out.join(COMPARISON_FILE)];
    for &kind in models {
        files.push(scatter_path(out, kind));
        files.push(error_hist_path(out, kind));
        if kind.is_tree_based() {
            files.push(importance_path(out, kind));
        }
    }
    files
}

fn read_csv(path: &Path) -> Result<Vec<Vec<String>>, PipelineError> {
    let text = read_file(path)?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    reader
        .records()
        .map(|r| {
            r.map(|rec| rec.iter().map(str::to_string).collect())
                .map_err(|e| PipelineError::Parse(format!("{}: {e}", path.display())))
        })
        .collect()
}

fn number(path: &Path, s: &str) -> Result<f64, PipelineError> {
    s.parse()
        .map_err(|_| PipelineError::Parse(format!("{}: `{s}` is not a number", path.display())))
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Renders the report. Fails with the full list of absent inputs if any are
/// missing.
pub fn render_report(out: &Path, models: &[ModelKind]) -> Result<String, PipelineError> {
    let expected = expected_report_inputs(out, models);
    let missing: Vec<PathBuf> = expected.iter().filter(|p| !p.is_file()).cloned().collect();
    if !missing.is_empty() {
        return Err(PipelineError::MissingInputs(missing));
    }

    let comparison_path = out.join(COMPARISON_FILE);
    let rows = read_csv(&comparison_path)?;
    let mut md = String::new();
    md.push_str("# Model comparison\n\n");
    md.push_str("| Model | MSE | RMSE | R² |\n|---|---:|---:|---:|\n");
    for &kind in models {
        let row = rows
            .iter()
            .find(|r| r.first().map(String::as_str) == Some(kind.name()))
            .filter(|r| r.len() >= 4)
            .ok_or_else(|| PipelineError::Parse(format!("{}: no row for {kind}", comparison_path.display())))?;
        let [mse, rmse, r2] = [1, 2, 3].map(|i| number(&comparison_path, &row[i]));
        writeln!(md, "| {kind} | {:.4} | {:.4} | {:.4} |", mse?, rmse?, r2?).unwrap();
    }

    let tree_models: Vec<ModelKind> = models.iter().copied().filter(|k| k.is_tree_based()).collect();
    if !tree_models.is_empty() {
        md.push_str("\n# Feature importance (gain share)\n");
        for kind in tree_models {
            let path = importance_path(out, kind);
            writeln!(md, "\n## {kind}\n\n| Rank | Feature | Share | Total gain |\n|---:|---|---:|---:|").unwrap();
            for (rank, row) in read_csv(&path)?.iter().enumerate() {
                if row.len() < 3 {
                    return Err(PipelineError::Parse(format!("{}: short row", path.display())));
                }
                let gain = number(&path, &row[1])?;
                let share = number(&path, &row[2])?;
                writeln!(md, "| {} | {} | {share:.4} | {gain:.6e} |", rank + 1, row[0]).unwrap();
            }
        }
    }

    md.push_str("\n# Plot data\n\n| Model | Actual vs predicted | Error histogram |\n|---|---|---|\n");
    for &kind in models {
        writeln!(
            md,
            "| {kind} | `{}` | `{}` |",
            file_name(&scatter_path(out, kind)),
            file_name(&error_hist_path(out, kind))
        )
        .unwrap();
    }
    Ok(md)
}
