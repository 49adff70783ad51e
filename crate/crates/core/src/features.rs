//! Interfaces between metrics and neural-network back ends.

use serde::{Deserialize, Serialize};

use crate::imaging::Image;

/// Activation tensor read from a named model output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    shape: Vec<usize>,
    values: Vec<f32>,
}

impl FeatureMap {
    pub fn new(shape: Vec<usize>, values: Vec<f32>) -> Result<Self, InferenceError> {
        let expected: usize = shape.iter().product();
        if expected != values.len() {
            return Err(InferenceError::Shape(format!(
                "shape {shape:?} holds {expected} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(InferenceError::NonFinite);
        }
        Ok(Self { shape, values })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }
}

/// Realism estimate of a single image: 0 = inpainted, 1 = clean. Not clamped.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealismScore(pub f64);

#[derive(Debug, Clone, thiserror::Error)]
pub enum InferenceError {
    #[error("inference failed: {0}")]
    Failed(String),
    #[error("unexpected output shape: {0}")]
    Shape(String),
    #[error("model produced non-finite values")]
    NonFinite,
}

/// Produces a deep feature map for an image.
pub trait FeatureExtractor: Send + Sync {
    fn extract_features(&self, img: &Image) -> Result<FeatureMap, InferenceError>;
}

/// Produces a no-reference realism score for an image.
pub trait RealismScorer: Send + Sync {
    fn score(&self, img: &Image) -> Result<RealismScore, InferenceError>;
}
