//! Image representation, PNG I/O and dataset-preparation geometry.

mod geometry;
mod manifest;
mod raster;

pub use geometry::{apply_center_mask, center_crop_square, hole_origin, resize};
pub use manifest::{build_manifest, DatasetManifest, ManifestEntry, PrepParams};
pub use raster::{load_image, load_mask, HoleMask, Image};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum ImagingError {
    #[error("file not found: {0}")]
    NotFound(PathBuf),
    #[error("failed to decode {path}: {reason}")]
    Decode { path: PathBuf, reason: String },
    #[error("failed to write {path}: {reason}")]
    Encode { path: PathBuf, reason: String },
    #[error("invalid image dimensions {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },
    #[error("buffer holds {actual} samples, expected {expected}")]
    BufferSize { expected: usize, actual: usize },
    #[error("mask contains value {0}; only 0 and 255 are allowed")]
    InvalidMaskValue(u8),
    #[error("hole side {hole_side} does not fit in a {width}x{height} image")]
    HoleTooLarge {
        hole_side: usize,
        width: usize,
        height: usize,
    },
    #[error("missing ground truth for image '{0}'")]
    MissingGroundTruth(String),
    #[error("missing file {path} for image '{image_id}'")]
    MissingFile { image_id: String, path: PathBuf },
    #[error("{path} is {actual_w}x{actual_h} but ground truth of '{image_id}' is {expected_w}x{expected_h}")]
    DimensionMismatch {
        image_id: String,
        path: PathBuf,
        expected_w: u32,
        expected_h: u32,
        actual_w: u32,
        actual_h: u32,
    },
    #[error("variant name '{0}' is reserved")]
    ReservedVariant(String),
    #[error("duplicate image id '{0}'")]
    DuplicateImageId(String),
    #[error("manifest I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest JSON error: {0}")]
    Json(#[from] serde_json::Error),
}
