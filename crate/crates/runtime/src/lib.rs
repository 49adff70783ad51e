//! Pretrained classifier inference for the deep-feature and no-reference
//! realism metrics.
//!
//! Models are ONNX graphs described by a JSON sidecar ([`ModelSpec`]) that
//! names the output tensor to read and the preprocessing the weights expect.
//! Inference runs on the pure-Rust `tract` engine.

mod preprocess;
pub mod stub;

pub use preprocess::{preprocess, InputTensor};

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use inpaint_eval_core::features::{FeatureExtractor, FeatureMap, InferenceError, RealismScore, RealismScorer};
use inpaint_eval_core::imaging::Image;
use serde::{Deserialize, Serialize};
use tract_onnx::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelOrder {
    #[serde(rename = "RGB")]
    Rgb,
    #[serde(rename = "BGR")]
    Bgr,
}

/// Memory layout of the model input.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layout {
    /// `[1, 3, side, side]`
    #[default]
    #[serde(rename = "NCHW")]
    Nchw,
    /// `[1, side, side, 3]`
    #[serde(rename = "NHWC")]
    Nhwc,
}

/// Per-sample transform `(v * scale - mean[c]) / std[c]`. `mean` and `std`
/// are indexed in RGB order; channels are reordered afterwards.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub scale: f64,
    pub mean: [f64; 3],
    pub std: [f64; 3],
    pub channel_order: ChannelOrder,
    #[serde(default)]
    pub layout: Layout,
}

impl Default for Preprocessing {
    fn default() -> Self {
        Self {
            scale: 1.0 / 255.0,
            mean: [0.0; 3],
            std: [1.0; 3],
            channel_order: ChannelOrder::Rgb,
            layout: Layout::Nchw,
        }
    }
}

/// Contents of a model sidecar file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model_path: PathBuf,
    /// Exact, case-sensitive name of the tensor to read.
    pub output_name: String,
    pub input_side: usize,
    pub preprocessing: Preprocessing,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.input_side == 0 {
            return Err(ModelError::InvalidSpec("input_side must be at least 1".into()));
        }
        let p = &self.preprocessing;
        if p.std.iter().any(|s| *s == 0.0 || !s.is_finite()) {
            return Err(ModelError::InvalidSpec("std components must be nonzero".into()));
        }
        if !p.scale.is_finite() || p.mean.iter().any(|m| !m.is_finite()) {
            return Err(ModelError::InvalidSpec("scale and mean must be finite".into()));
        }
        Ok(())
    }

    /// Reads a sidecar. A relative `model_path` is resolved against the
    /// sidecar's directory.
    pub fn from_sidecar(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| ModelError::Io(path.to_owned(), e.to_string()))?;
        let mut spec: ModelSpec =
            serde_json::from_str(&text).map_err(|e| ModelError::InvalidSpec(format!("{}: {e}", path.display())))?;
        if spec.model_path.is_relative() {
            if let Some(dir) = path.parent() {
                spec.model_path = dir.join(&spec.model_path);
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn input_shape(&self) -> [usize; 4] {
        let s = self.input_side;
        match self.preprocessing.layout {
            Layout::Nchw => [1, 3, s, s],
            Layout::Nhwc => [1, s, s, 3],
        }
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum ModelError {
    #[error("cannot read {0}: {1}")]
    Io(PathBuf, String),
    #[error("failed to parse model {0}: {1}")]
    Parse(PathBuf, String),
    #[error("output '{name}' not found; available outputs: {}", .available.join(", "))]
    UnknownOutput { name: String, available: Vec<String> },
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("failed to prepare model for inference: {0}")]
    Prepare(String),
}

/// A loaded model, ready for repeated inference. Cheap to clone and safe to
/// share between threads; each run uses its own execution state.
#[derive(Clone)]
pub struct ModelHandle {
    plan: Arc<TypedRunnableModel>,
    spec: ModelSpec,
    input_shape: Vec<usize>,
}

impl std::fmt::Debug for ModelHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelHandle")
            .field("spec", &self.spec)
            .field("input_shape", &self.input_shape)
            .finish()
    }
}

pub fn load_model(spec: &ModelSpec) -> Result<ModelHandle, ModelError> {
    spec.validate()?;
    let path = &spec.model_path;
    if !path.is_file() {
        return Err(ModelError::Io(path.clone(), "file not found".into()));
    }
    let mut model = tract_onnx::onnx()
        .model_for_path(path)
        .map_err(|e| ModelError::Parse(path.clone(), format!("{e:#}")))?;

    let outlet = model.find_outlet_label(&spec.output_name).ok_or_else(|| {
        let mut available: Vec<String> = model
            .nodes()
            .iter()
            .flat_map(|n| (0..n.outputs.len()).map(move |ix| OutletId::new(n.id, ix)))
            .filter_map(|o| model.outlet_label(o).map(str::to_owned))
            .collect();
        available.sort();
        available.dedup();
        ModelError::UnknownOutput {
            name: spec.output_name.clone(),
            available,
        }
    })?;
    model
        .select_output_outlets(&[outlet])
        .map_err(|e| ModelError::Prepare(format!("{e:#}")))?;

    let declared = model
        .input_fact(0)
        .and_then(|f| f.shape.as_concrete_finite())
        .map_err(|e| ModelError::Prepare(format!("{e:#}")))?;
    let input_shape: Vec<usize> = match declared {
        Some(shape) => shape.to_vec(),
        None => {
            let shape = spec.input_shape().to_vec();
            model
                .set_input_fact(0, f32::fact(&shape).into())
                .map_err(|e| ModelError::Prepare(format!("{e:#}")))?;
            shape
        }
    };
    let plan = model
        .into_optimized()
        .and_then(|m| m.into_runnable())
        .map_err(|e| ModelError::Prepare(format!("{e:#}")))?;
    Ok(ModelHandle {
        plan,
        spec: spec.clone(),
        input_shape,
    })
}

impl ModelHandle {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// Input shape the compiled graph accepts.
    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    fn run(&self, img: &Image) -> Result<(Vec<usize>, Vec<f32>), InferenceError> {
        let input = preprocess(img, &self.spec)?;
        if input.shape[..] != self.input_shape[..] {
            return Err(InferenceError::Failed(format!(
                "preprocessed input has shape {:?} but the model expects {:?}",
                input.shape, self.input_shape
            )));
        }
        let tensor =
            Tensor::from_shape(&input.shape, &input.data).map_err(|e| InferenceError::Failed(format!("{e:#}")))?;
        let outputs = self
            .plan
            .run(tvec!(tensor.into()))
            .map_err(|e| InferenceError::Failed(format!("{e:#}")))?;
        let out = outputs[0]
            .cast_to::<f32>()
            .map_err(|e| InferenceError::Failed(format!("{e:#}")))?;
        let values: Vec<f32> = out
            .to_plain_array_view::<f32>()
            .map_err(|e| InferenceError::Failed(format!("{e:#}")))?
            .iter()
            .copied()
            .collect();
        Ok((out.shape().to_vec(), values))
    }

    /// Forward pass up to the configured output tensor.
    pub fn extract_features(&self, img: &Image) -> Result<FeatureMap, InferenceError> {
        let (shape, values) = self.run(img)?;
        FeatureMap::new(shape, values)
    }

    /// Reads a one-element output as the realism score, unclamped.
    pub fn score_single(&self, img: &Image) -> Result<RealismScore, InferenceError> {
        let (shape, values) = self.run(img)?;
        if values.len() != 1 {
            return Err(InferenceError::Shape(format!(
                "expected a single value, got shape {shape:?}"
            )));
        }
        finite(values[0] as f64)
    }

    /// Reads two logits (index 0 = inpainted, 1 = clean) and returns the
    /// softmax probability of "clean".
    pub fn score_two_class(&self, img: &Image) -> Result<RealismScore, InferenceError> {
        let (shape, values) = self.run(img)?;
        if values.len() != 2 {
            return Err(InferenceError::Shape(format!(
                "expected two logits, got shape {shape:?}"
            )));
        }
        finite(clean_probability(values[0] as f64, values[1] as f64))
    }
}

fn finite(v: f64) -> Result<RealismScore, InferenceError> {
    if v.is_finite() {
        Ok(RealismScore(v))
    } else {
        Err(InferenceError::NonFinite)
    }
}

/// `softmax(inpainted, clean)[1]`, evaluated without overflow.
pub fn clean_probability(inpainted_logit: f64, clean_logit: f64) -> f64 {
    let d = inpainted_logit - clean_logit;
    if d >= 0.0 {
        let e = (-d).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + d.exp())
    }
}

impl FeatureExtractor for ModelHandle {
    fn extract_features(&self, img: &Image) -> Result<FeatureMap, InferenceError> {
        ModelHandle::extract_features(self, img)
    }
}

/// How a no-reference model's output turns into a score.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreHead {
    /// One regression output.
    Single,
    /// Two class logits, 0 = inpainted and 1 = clean.
    TwoClass,
}

pub struct RealismModel {
    pub handle: ModelHandle,
    pub head: ScoreHead,
}

impl RealismScorer for RealismModel {
    fn score(&self, img: &Image) -> Result<RealismScore, InferenceError> {
        match self.head {
            ScoreHead::Single => self.handle.score_single(img),
            ScoreHead::TwoClass => self.handle.score_two_class(img),
        }
    }
}
