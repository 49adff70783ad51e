use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use inpaint_eval_core::judgements::{FitReport, SubjectiveScoreTable};
use inpaint_eval_core::metric::{read_csv, MetricScoreTable};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

pub fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::user(format!("cannot read {}: {e}", path.display())))
}

pub fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::user(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::user(format!("cannot write {}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("output types serialize");
    bytes.push(b'\n');
    write(path, &bytes)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    serde_json::from_slice(&read(path)?).map_err(|e| CliError::user(format!("{}: {e}", path.display())))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TablesFile {
    Many(Vec<MetricScoreTable>),
    One(MetricScoreTable),
}

/// Score tables from a metric CSV (possibly several metrics) or JSON (one
/// table or an array).
pub fn read_metric_tables(path: &Path) -> Result<Vec<MetricScoreTable>, CliError> {
    let bytes = read(path)?;
    let bad = |e: &dyn std::fmt::Display| CliError::user(format!("{}: {e}", path.display()));
    let tables = if is_json(path) {
        match serde_json::from_slice(&bytes).map_err(|e| bad(&e))? {
            TablesFile::Many(v) => v,
            TablesFile::One(t) => vec![t],
        }
    } else {
        read_csv(bytes.as_slice()).map_err(|e| bad(&e))?
    };
    for t in &tables {
        if let Some(s) = t
            .scores
            .iter()
            .find(|s| !s.raw_value.is_finite() || !s.quality_value.is_finite())
        {
            return Err(bad(&format!("non-finite score for ({}, {})", s.image_id, s.variant)));
        }
    }
    if tables.is_empty() {
        return Err(bad(&"no scores"));
    }
    Ok(tables)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SubjectiveFile {
    Report(FitReport),
    Tables(BTreeMap<String, SubjectiveScoreTable>),
}

/// Fitted strengths from `fit` output, or a bare image-to-table map.
pub fn read_subjective(path: &Path) -> Result<BTreeMap<String, SubjectiveScoreTable>, CliError> {
    let tables = match read_json(path)? {
        SubjectiveFile::Report(r) => r.tables,
        SubjectiveFile::Tables(t) => t,
    };
    if tables.is_empty() {
        return Err(CliError::user(format!("{}: no fitted images", path.display())));
    }
    Ok(tables)
}
