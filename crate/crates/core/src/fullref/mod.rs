//! Full-reference metrics (SSIM, deep-feature MSE) and the manifest-wide
//! metric runner, which also drives no-reference scorers.

mod ssim;

pub use ssim::{luma, ssim, SsimParams};

use rayon::prelude::*;

use crate::features::{FeatureExtractor, FeatureMap, InferenceError, RealismScorer};
use crate::imaging::{load_image, DatasetManifest, Image, ImagingError, ManifestEntry};
use crate::metric::{MetricFailure, MetricScore, MetricScoreTable, Orientation};
use crate::GROUND_TRUTH;

#[derive(Debug, thiserror::Error)]
pub enum FullRefError {
    #[error("dimension mismatch: reference {reference:?}, test {test:?}")]
    DimensionMismatch {
        reference: (usize, usize),
        test: (usize, usize),
    },
    #[error("{width}x{height} image is smaller than the {window}x{window} window")]
    TooSmall { width: usize, height: usize, window: usize },
    #[error("invalid SSIM parameters: {0}")]
    InvalidParams(String),
    #[error("feature map shapes differ: {0:?} vs {1:?}")]
    FeatureShapeMismatch(Vec<usize>, Vec<usize>),
    #[error("feature map is empty")]
    EmptyFeatures,
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error("variant '{0}' has no file in the manifest")]
    UnknownVariant(String),
}

/// Mean of squared elementwise differences of two feature maps.
pub fn feature_map_mse(a: &FeatureMap, b: &FeatureMap) -> Result<f64, FullRefError> {
    if a.shape() != b.shape() {
        return Err(FullRefError::FeatureShapeMismatch(
            a.shape().to_vec(),
            b.shape().to_vec(),
        ));
    }
    if a.values().is_empty() {
        return Err(FullRefError::EmptyFeatures);
    }
    let sum: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| {
            let d = *x as f64 - *y as f64;
            d * d
        })
        .sum();
    Ok(sum / a.values().len() as f64)
}

pub fn feature_mse(reference: &Image, test: &Image, model: &dyn FeatureExtractor) -> Result<f64, FullRefError> {
    let a = model.extract_features(reference)?;
    let b = model.extract_features(test)?;
    feature_map_mse(&a, &b)
}

/// A full-reference metric applied to (ground truth, variant) pairs.
#[derive(Clone, Copy)]
pub enum FullRefMetric<'a> {
    Ssim(SsimParams),
    FeatureMse {
        name: &'a str,
        model: &'a dyn FeatureExtractor,
    },
}

impl FullRefMetric<'_> {
    pub fn name(&self) -> String {
        match self {
            FullRefMetric::Ssim(_) => "ssim".to_owned(),
            FullRefMetric::FeatureMse { name, .. } => (*name).to_owned(),
        }
    }

    pub fn orientation(&self) -> Orientation {
        match self {
            FullRefMetric::Ssim(_) => Orientation::Similarity,
            FullRefMetric::FeatureMse { .. } => Orientation::Distance,
        }
    }
}

type EntryResult = Vec<Result<MetricScore, MetricFailure>>;

fn collect(metric: String, per_entry: Vec<EntryResult>) -> MetricScoreTable {
    let mut table = MetricScoreTable::new(metric);
    for r in per_entry.into_iter().flatten() {
        match r {
            Ok(s) => table.scores.push(s),
            Err(f) => table.failures.push(f),
        }
    }
    table.sort();
    table
}

fn failure(entry: &ManifestEntry, variant: &str, err: impl std::fmt::Display) -> MetricFailure {
    MetricFailure {
        image_id: entry.image_id.clone(),
        variant: variant.to_owned(),
        error: err.to_string(),
    }
}

fn load_variant(entry: &ManifestEntry, variant: &str) -> Result<Image, FullRefError> {
    let path = entry
        .path_for(variant)
        .ok_or_else(|| FullRefError::UnknownVariant(variant.to_owned()))?;
    Ok(load_image(path)?)
}

/// Scores every variant of every manifest entry, including the ground truth
/// against itself. Failures are recorded per entry without stopping the run.
/// Entries are processed on the current rayon pool.
pub fn run_fullref_metric(manifest: &DatasetManifest, metric: FullRefMetric<'_>) -> MetricScoreTable {
    let orientation = metric.orientation();
    let per_entry: Vec<EntryResult> = manifest
        .entries
        .par_iter()
        .map(|entry| {
            let variants = entry.all_variants();
            let gt = match load_image(&entry.ground_truth_path) {
                Ok(img) => img,
                Err(e) => return variants.iter().map(|v| Err(failure(entry, v, &e))).collect(),
            };
            let gt_features = match metric {
                FullRefMetric::FeatureMse { model, .. } => match model.extract_features(&gt) {
                    Ok(f) => Some(f),
                    Err(e) => return variants.iter().map(|v| Err(failure(entry, v, &e))).collect(),
                },
                FullRefMetric::Ssim(_) => None,
            };
            variants
                .iter()
                .map(|variant| {
                    let raw = (|| -> Result<f64, FullRefError> {
                        let test = if variant == GROUND_TRUTH {
                            gt.clone()
                        } else {
                            load_variant(entry, variant)?
                        };
                        match (&metric, &gt_features) {
                            (FullRefMetric::Ssim(p), _) => ssim(&gt, &test, p),
                            (FullRefMetric::FeatureMse { model, .. }, Some(gf)) => {
                                feature_map_mse(gf, &model.extract_features(&test)?)
                            }
                            (FullRefMetric::FeatureMse { .. }, None) => unreachable!("features extracted above"),
                        }
                    })();
                    raw.map(|raw| MetricScore {
                        image_id: entry.image_id.clone(),
                        variant: variant.clone(),
                        raw_value: raw,
                        quality_value: orientation.quality(raw),
                    })
                    .map_err(|e| failure(entry, variant, e))
                })
                .collect()
        })
        .collect();
    collect(metric.name(), per_entry)
}

/// Applies a no-reference scorer to every variant and the ground truth.
/// Scores are similarities: higher means more realistic.
pub fn run_noref_metric(manifest: &DatasetManifest, name: &str, scorer: &dyn RealismScorer) -> MetricScoreTable {
    let per_entry: Vec<EntryResult> = manifest
        .entries
        .par_iter()
        .map(|entry| {
            entry
                .all_variants()
                .iter()
                .map(|variant| {
                    let raw = load_variant(entry, variant)
                        .and_then(|img| Ok(scorer.score(&img)?.0))
                        .and_then(|v| {
                            if v.is_finite() {
                                Ok(v)
                            } else {
                                Err(InferenceError::NonFinite.into())
                            }
                        });
                    raw.map(|raw| MetricScore {
                        image_id: entry.image_id.clone(),
                        variant: variant.clone(),
                        raw_value: raw,
                        quality_value: Orientation::Similarity.quality(raw),
                    })
                    .map_err(|e| failure(entry, variant, e))
                })
                .collect()
        })
        .collect();
    collect(name.to_owned(), per_entry)
}
