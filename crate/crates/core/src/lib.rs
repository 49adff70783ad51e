//! Core building blocks for evaluating image-inpainting quality.
//!
//! * [`imaging`]: RGB rasters, hole masks, dataset preparation geometry and
//!   the on-disk dataset manifest.
//! * [`features`]: the inference traits that model back ends implement.
//! * [`fullref`]: SSIM and deep-feature distance between ground truth and
//!   an inpainted result, plus the per-manifest metric runner.
//! * [`metric`]: objective score tables and their CSV/JSON forms.
//! * [`judgements`]: pairwise human judgements, verification filtering and
//!   Bradley-Terry strength fitting.
//! * [`correlation`]: per-image Pearson/Spearman agreement between objective
//!   and subjective scores.

pub mod correlation;
pub mod features;
pub mod fullref;
pub mod imaging;
pub mod judgements;
pub mod metric;

/// Variant name reserved for the original, un-inpainted image.
pub const GROUND_TRUTH: &str = "ground_truth";
