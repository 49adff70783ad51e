//! Agreement between objective metrics and subjective strengths.
//!
//! For every image the metric's quality values are correlated with the
//! fitted strengths over the image's variants; the per-image coefficients
//! are then summarized by their mean and population standard deviation.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::judgements::SubjectiveScoreTable;
use crate::metric::MetricScoreTable;
use crate::GROUND_TRUTH;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CorrelationError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 observations, got {0}")]
    TooShort(usize),
    #[error("zero variance input")]
    ZeroVariance,
    #[error("non-finite input")]
    NonFinite,
    #[error("variant sets differ:\n{}", format_mismatches(.0))]
    VariantMismatch(Vec<ImageMismatch>),
    #[error("image '{image_id}': {source}")]
    Image {
        image_id: String,
        #[source]
        source: Box<CorrelationError>,
    },
    #[error("no images to evaluate")]
    NoImages,
    #[error("no checkpoints to select from")]
    NoCheckpoints,
}

/// Per-image diagnostic for misaligned metric and subjective tables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageMismatch {
    pub image_id: String,
    pub only_in_metric: Vec<String>,
    pub only_in_subjective: Vec<String>,
}

fn format_mismatches(m: &[ImageMismatch]) -> String {
    m.iter()
        .map(|x| {
            format!(
                "  {}: only in metric {:?}, only in subjective {:?}",
                x.image_id, x.only_in_metric, x.only_in_subjective
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn check_pair(xs: &[f64], ys: &[f64]) -> Result<(), CorrelationError> {
    if xs.len() != ys.len() {
        return Err(CorrelationError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(CorrelationError::TooShort(xs.len()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(CorrelationError::NonFinite);
    }
    Ok(())
}

/// Sample Pearson correlation. Zero variance in either input is an error.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, CorrelationError> {
    check_pair(xs, ys)?;
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(CorrelationError::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the average of their positions.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        // positions start..end (0-based) share rank mean of (start+1 ..= end)
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation of average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, CorrelationError> {
    check_pair(xs, ys)?;
    pearson(&average_ranks(xs), &average_ranks(ys))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageCorrelation {
    pub pearson: f64,
    pub spearman: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub metric_name: String,
    pub include_ground_truth: bool,
    pub per_image: BTreeMap<String, ImageCorrelation>,
    pub mean_pearson: f64,
    pub std_pearson: f64,
    pub mean_spearman: f64,
    pub std_spearman: f64,
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl CorrelationReport {
    pub fn from_per_image(
        metric_name: impl Into<String>,
        include_ground_truth: bool,
        per_image: BTreeMap<String, ImageCorrelation>,
    ) -> Result<Self, CorrelationError> {
        if per_image.is_empty() {
            return Err(CorrelationError::NoImages);
        }
        let rs: Vec<f64> = per_image.values().map(|c| c.pearson).collect();
        let rhos: Vec<f64> = per_image.values().map(|c| c.spearman).collect();
        let (mean_pearson, std_pearson) = mean_std(&rs);
        let (mean_spearman, std_spearman) = mean_std(&rhos);
        Ok(Self {
            metric_name: metric_name.into(),
            include_ground_truth,
            per_image,
            mean_pearson,
            std_pearson,
            mean_spearman,
            std_spearman,
        })
    }
}

/// Correlates a metric with the subjective strengths image by image.
///
/// Every image with a subjective table is evaluated; the metric must cover
/// exactly the same variants there (after the optional removal of
/// [`GROUND_TRUTH`] from both sides). All mismatching images are reported
/// together.
pub fn evaluate_metric(
    metric: &MetricScoreTable,
    subjective: &BTreeMap<String, SubjectiveScoreTable>,
    include_ground_truth: bool,
) -> Result<CorrelationReport, CorrelationError> {
    if subjective.is_empty() {
        return Err(CorrelationError::NoImages);
    }
    let by_image = metric.by_image();
    let keep = |v: &str| include_ground_truth || v != GROUND_TRUTH;

    let mut mismatches = Vec::new();
    let mut aligned: Vec<(&str, Vec<f64>, Vec<f64>)> = Vec::new();
    for (image_id, table) in subjective {
        let subj: BTreeSet<&str> = table.strengths.keys().map(String::as_str).filter(|v| keep(v)).collect();
        let empty = BTreeMap::new();
        let scores = by_image.get(image_id.as_str()).unwrap_or(&empty);
        let objective: BTreeSet<&str> = scores.keys().copied().filter(|v| keep(v)).collect();
        if subj != objective {
            mismatches.push(ImageMismatch {
                image_id: image_id.clone(),
                only_in_metric: objective.difference(&subj).map(|s| s.to_string()).collect(),
                only_in_subjective: subj.difference(&objective).map(|s| s.to_string()).collect(),
            });
            continue;
        }
        let xs = subj.iter().map(|v| scores[v]).collect();
        let ys = subj.iter().map(|v| table.strengths[*v]).collect();
        aligned.push((image_id, xs, ys));
    }
    if !mismatches.is_empty() {
        return Err(CorrelationError::VariantMismatch(mismatches));
    }

    let mut per_image = BTreeMap::new();
    for (image_id, xs, ys) in aligned {
        let wrap = |e| CorrelationError::Image {
            image_id: image_id.to_owned(),
            source: Box::new(e),
        };
        let r = pearson(&xs, &ys).map_err(wrap)?;
        let rho = spearman(&xs, &ys).map_err(wrap)?;
        per_image.insert(
            image_id.to_owned(),
            ImageCorrelation {
                pearson: r,
                spearman: rho,
            },
        );
    }
    CorrelationReport::from_per_image(metric.metric.clone(), include_ground_truth, per_image)
}

/// Picks the checkpoint whose scores have the highest mean Pearson
/// correlation; the earliest wins ties.
pub fn select_peak_checkpoint(
    checkpoints: &[MetricScoreTable],
    subjective: &BTreeMap<String, SubjectiveScoreTable>,
    include_ground_truth: bool,
) -> Result<(usize, CorrelationReport), CorrelationError> {
    let mut best: Option<(usize, CorrelationReport)> = None;
    for (i, table) in checkpoints.iter().enumerate() {
        let report = evaluate_metric(table, subjective, include_ground_truth)?;
        if best
            .as_ref()
            .map_or(true, |(_, b)| report.mean_pearson > b.mean_pearson)
        {
            best = Some((i, report));
        }
    }
    best.ok_or(CorrelationError::NoCheckpoints)
}
