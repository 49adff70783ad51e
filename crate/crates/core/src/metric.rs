//! Objective metric scores per (image, variant) and their file formats.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

/// Whether larger raw values mean better or worse quality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Similarity,
    Distance,
}

impl Orientation {
    /// Maps a raw value to higher-is-better quality.
    pub fn quality(self, raw: f64) -> f64 {
        match self {
            Orientation::Similarity => raw,
            Orientation::Distance => -raw,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricScore {
    pub image_id: String,
    pub variant: String,
    pub raw_value: f64,
    pub quality_value: f64,
}

/// An entry the metric could not be computed for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricFailure {
    pub image_id: String,
    pub variant: String,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricScoreTable {
    pub metric: String,
    pub scores: Vec<MetricScore>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<MetricFailure>,
}

#[derive(Debug, thiserror::Error)]
pub enum MetricTableError {
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("non-finite value for ({image_id}, {variant})")]
    NonFinite { image_id: String, variant: String },
    #[error("duplicate score for ({image_id}, {variant}) in metric '{metric}'")]
    Duplicate {
        metric: String,
        image_id: String,
        variant: String,
    },
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    image_id: String,
    variant: String,
    metric: String,
    raw_value: f64,
    quality_value: f64,
}

pub const CSV_HEADER: [&str; 5] = ["image_id", "variant", "metric", "raw_value", "quality_value"];

impl MetricScoreTable {
    pub fn new(metric: impl Into<String>) -> Self {
        Self {
            metric: metric.into(),
            scores: Vec::new(),
            failures: Vec::new(),
        }
    }

    /// Sorts scores and failures by (image_id, variant).
    pub fn sort(&mut self) {
        self.scores
            .sort_by(|a, b| (&a.image_id, &a.variant).cmp(&(&b.image_id, &b.variant)));
        self.failures
            .sort_by(|a, b| (&a.image_id, &a.variant).cmp(&(&b.image_id, &b.variant)));
    }

    /// Quality values grouped per image, keyed by variant.
    pub fn by_image(&self) -> BTreeMap<&str, BTreeMap<&str, f64>> {
        let mut out: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
        for s in &self.scores {
            out.entry(&s.image_id).or_default().insert(&s.variant, s.quality_value);
        }
        out
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), MetricTableError> {
        write_csv(std::slice::from_ref(self), writer)
    }

    pub fn to_json(&self) -> Result<String, MetricTableError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, MetricTableError> {
        let table: Self = serde_json::from_str(s)?;
        table.check()?;
        Ok(table)
    }

    fn check(&self) -> Result<(), MetricTableError> {
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.scores {
            if !s.raw_value.is_finite() || !s.quality_value.is_finite() {
                return Err(MetricTableError::NonFinite {
                    image_id: s.image_id.clone(),
                    variant: s.variant.clone(),
                });
            }
            if !seen.insert((&s.image_id, &s.variant)) {
                return Err(MetricTableError::Duplicate {
                    metric: self.metric.clone(),
                    image_id: s.image_id.clone(),
                    variant: s.variant.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Writes one or more tables into a single CSV with the standard header.
pub fn write_csv<W: Write>(tables: &[MetricScoreTable], writer: W) -> Result<(), MetricTableError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for t in tables {
        for s in &t.scores {
            w.serialize(CsvRow {
                image_id: s.image_id.clone(),
                variant: s.variant.clone(),
                metric: t.metric.clone(),
                raw_value: s.raw_value,
                quality_value: s.quality_value,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a score CSV; rows are grouped into one table per metric name, in
/// order of first appearance.
pub fn read_csv<R: Read>(reader: R) -> Result<Vec<MetricScoreTable>, MetricTableError> {
    let mut r = csv::Reader::from_reader(reader);
    let mut tables: Vec<MetricScoreTable> = Vec::new();
    for row in r.deserialize() {
        let row: CsvRow = row?;
        let idx = match tables.iter().position(|t| t.metric == row.metric) {
            Some(i) => i,
            None => {
                tables.push(MetricScoreTable::new(row.metric.clone()));
                tables.len() - 1
            }
        };
        tables[idx].scores.push(MetricScore {
            image_id: row.image_id,
            variant: row.variant,
            raw_value: row.raw_value,
            quality_value: row.quality_value,
        });
    }
    for t in &tables {
        t.check()?;
    }
    Ok(tables)
}
