use inpaint_eval_core::features::InferenceError;
use inpaint_eval_core::imaging::{resize, Image};

use crate::{ChannelOrder, Layout, ModelSpec};

/// Dense f32 input ready to hand to the engine.
#[derive(Clone, Debug, PartialEq)]
pub struct InputTensor {
    pub shape: [usize; 4],
    pub data: Vec<f32>,
}

/// Resizes to `input_side` (bilinear, skipped when already that size),
/// applies the per-channel transform and lays the result out as the spec
/// asks.
pub fn preprocess(img: &Image, spec: &ModelSpec) -> Result<InputTensor, InferenceError> {
    let side = spec.input_side;
    let resized;
    let img = if img.width() == side && img.height() == side {
        img
    } else {
        resized = resize(img, side, side).map_err(|e| InferenceError::Failed(e.to_string()))?;
        &resized
    };
    let p = &spec.preprocessing;
    // Output channel k reads source channel src[k].
    let src = match p.channel_order {
        ChannelOrder::Rgb => [0, 1, 2],
        ChannelOrder::Bgr => [2, 1, 0],
    };
    let plane = side * side;
    let mut data = vec![0f32; 3 * plane];
    for (i, px) in img.data().chunks_exact(3).enumerate() {
        for (k, &c) in src.iter().enumerate() {
            let v = (px[c] as f64 * p.scale - p.mean[c]) / p.std[c];
            let at = match p.layout {
                Layout::Nchw => k * plane + i,
                Layout::Nhwc => i * 3 + k,
            };
            data[at] = v as f32;
        }
    }
    Ok(InputTensor {
        shape: spec.input_shape(),
        data,
    })
}
