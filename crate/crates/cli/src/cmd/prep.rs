use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use inpaint_eval_core::imaging::{
    apply_center_mask, center_crop_square, load_image, resize, DatasetManifest, ImagingError, ManifestEntry, PrepParams,
};

use crate::{files, CliError, PrepArgs};

const GT: &str = "gt.png";
const MASK: &str = "mask.png";
const MASKED: &str = "masked.png";

fn prepare(src: &Path, dir: &Path, params: PrepParams) -> Result<(), ImagingError> {
    let img = load_image(src)?;
    let square = center_crop_square(&img);
    let gt = resize(&square, params.target_side, params.target_side)?;
    let (masked, mask) = apply_center_mask(&gt, params.hole_side)?;
    fs::create_dir_all(dir.join("variants")).map_err(|source| ImagingError::Io {
        path: dir.to_owned(),
        source,
    })?;
    gt.save_png(dir.join(GT))?;
    mask.save_png(dir.join(MASK))?;
    masked.save_png(dir.join(MASKED))
}

pub fn run(a: PrepArgs) -> Result<(), CliError> {
    if a.side == 0 {
        return Err(CliError::user("--side must be at least 1"));
    }
    if a.hole == 0 || a.hole > a.side {
        return Err(CliError::user(format!(
            "--hole must be between 1 and --side ({}), got {}",
            a.side, a.hole
        )));
    }
    let params = PrepParams {
        target_side: a.side,
        hole_side: a.hole,
    };

    let listing =
        fs::read_dir(&a.input).map_err(|e| CliError::user(format!("cannot list {}: {e}", a.input.display())))?;
    let mut inputs: BTreeMap<String, PathBuf> = BTreeMap::new();
    let mut failures: Vec<(PathBuf, String)> = Vec::new();
    let mut total = 0;
    for item in listing {
        let path = item
            .map_err(|e| CliError::user(format!("cannot list {}: {e}", a.input.display())))?
            .path();
        if !path.is_file() {
            continue;
        }
        if !path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
            tracing::warn!(path = %path.display(), "skipping non-PNG file");
            continue;
        }
        total += 1;
        let id = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        if let Some(prev) = inputs.get(&id) {
            failures.push((
                path.clone(),
                format!("image id '{id}' already taken by {}", prev.display()),
            ));
            continue;
        }
        inputs.insert(id, path);
    }
    if total == 0 {
        return Err(CliError::user(format!("no PNG files in {}", a.input.display())));
    }

    let mut entries = Vec::new();
    for (id, src) in &inputs {
        let dir = a.out.join(id);
        match prepare(src, &dir, params) {
            Ok(()) => entries.push(ManifestEntry {
                image_id: id.clone(),
                ground_truth_path: dir.join(GT),
                masked_path: dir.join(MASKED),
                mask_path: dir.join(MASK),
                variant_paths: BTreeMap::new(),
            }),
            Err(e) => failures.push((src.clone(), e.to_string())),
        }
    }
    let manifest = DatasetManifest {
        entries,
        prep_params: params,
    };
    let manifest_path = a.out.join("manifest.json");
    let json = manifest.to_json().map_err(CliError::data)?;
    files::write(&manifest_path, format!("{json}\n").as_bytes())?;

    println!(
        "prepared {} of {} images at {}x{} with a {}x{} hole -> {}",
        manifest.entries.len(),
        total,
        a.side,
        a.side,
        a.hole,
        a.hole,
        manifest_path.display()
    );
    if failures.is_empty() {
        return Ok(());
    }
    failures.sort();
    for (path, reason) in &failures {
        eprintln!("  {}: {reason}", path.display());
    }
    Err(CliError::data(format!(
        "{} input(s) could not be prepared",
        failures.len()
    )))
}
