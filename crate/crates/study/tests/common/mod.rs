#![allow(dead_code)]

use std::path::Path;

use inpaint_eval_core::imaging::{apply_center_mask, build_manifest, Image, PrepParams};
use inpaint_eval_study::StudyConfig;

pub const VARIANTS: [&str; 4] = ["ground_truth", "method_alpha", "method_beta", "method_gamma"];
pub const WEAK: &str = "exemplar_weak";

/// `images` 16x16 entries, each with the three methods and the weak
/// verification variant, every raster a distinct flat color.
pub fn dataset(root: &Path, images: usize) -> StudyConfig {
    dataset_with(root, images, 22, 2)
}

pub fn dataset_with(root: &Path, images: usize, pairs: usize, ver: usize) -> StudyConfig {
    for i in 0..images {
        let dir = root.join(format!("img{i:02}"));
        std::fs::create_dir_all(dir.join("variants")).unwrap();
        let gt = Image::filled(16, 16, [i as u8, 0, 0]).unwrap();
        let (masked, mask) = apply_center_mask(&gt, 4).unwrap();
        gt.save_png(dir.join("gt.png")).unwrap();
        masked.save_png(dir.join("masked.png")).unwrap();
        mask.save_png(dir.join("mask.png")).unwrap();
        for (k, v) in VARIANTS[1..].iter().chain([&WEAK]).enumerate() {
            Image::filled(16, 16, [i as u8, k as u8 + 1, 0])
                .unwrap()
                .save_png(dir.join(format!("variants/{v}.png")))
                .unwrap();
        }
    }
    let manifest = build_manifest(
        root,
        PrepParams {
            target_side: 16,
            hole_side: 4,
        },
    )
    .unwrap();
    StudyConfig {
        manifest,
        variants_under_test: VARIANTS.iter().map(|s| s.to_string()).collect(),
        pairs_per_session: pairs,
        verification_pairs_per_session: ver,
        verification_weak_variant: WEAK.into(),
    }
}
