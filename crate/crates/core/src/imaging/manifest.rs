use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ImagingError;
use crate::GROUND_TRUTH;

pub const GROUND_TRUTH_FILE: &str = "gt.png";
pub const MASK_FILE: &str = "mask.png";
pub const MASKED_FILE: &str = "masked.png";
pub const VARIANTS_DIR: &str = "variants";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrepParams {
    pub target_side: usize,
    pub hole_side: usize,
}

impl Default for PrepParams {
    fn default() -> Self {
        Self {
            target_side: 512,
            hole_side: 180,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image_id: String,
    pub ground_truth_path: PathBuf,
    pub masked_path: PathBuf,
    pub mask_path: PathBuf,
    pub variant_paths: BTreeMap<String, PathBuf>,
}

impl ManifestEntry {
    /// File holding `variant`; [`GROUND_TRUTH`] resolves to the original image.
    pub fn path_for(&self, variant: &str) -> Option<&Path> {
        if variant == GROUND_TRUTH {
            Some(&self.ground_truth_path)
        } else {
            self.variant_paths.get(variant).map(PathBuf::as_path)
        }
    }

    /// Variant names including [`GROUND_TRUTH`], sorted.
    pub fn all_variants(&self) -> Vec<String> {
        let mut names: Vec<String> = self.variant_paths.keys().cloned().collect();
        names.push(GROUND_TRUTH.to_owned());
        names.sort();
        names
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub prep_params: PrepParams,
}

impl DatasetManifest {
    pub fn entry(&self, image_id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.image_id == image_id)
    }

    pub fn to_json(&self) -> Result<String, ImagingError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, ImagingError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ImagingError> {
        let path = path.as_ref();
        fs::write(path, self.to_json()? + "\n").map_err(|source| ImagingError::Io {
            path: path.to_owned(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ImagingError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ImagingError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Checks id uniqueness, file existence and that every raster of an
    /// entry shares the ground truth's dimensions.
    pub fn validate(&self) -> Result<(), ImagingError> {
        let mut seen = BTreeSet::new();
        for entry in &self.entries {
            if !seen.insert(entry.image_id.as_str()) {
                return Err(ImagingError::DuplicateImageId(entry.image_id.clone()));
            }
            if entry.variant_paths.contains_key(GROUND_TRUTH) {
                return Err(ImagingError::ReservedVariant(GROUND_TRUTH.into()));
            }
            check_entry_dimensions(entry)?;
        }
        Ok(())
    }
}

fn dimensions(image_id: &str, path: &Path) -> Result<(u32, u32), ImagingError> {
    if !path.is_file() {
        return Err(ImagingError::MissingFile {
            image_id: image_id.into(),
            path: path.to_owned(),
        });
    }
    image::image_dimensions(path).map_err(|e| ImagingError::Decode {
        path: path.to_owned(),
        reason: e.to_string(),
    })
}

fn check_entry_dimensions(entry: &ManifestEntry) -> Result<(), ImagingError> {
    let id = entry.image_id.as_str();
    if !entry.ground_truth_path.is_file() {
        return Err(ImagingError::MissingGroundTruth(id.into()));
    }
    let (gw, gh) = dimensions(id, &entry.ground_truth_path)?;
    let others = [&entry.mask_path, &entry.masked_path]
        .into_iter()
        .chain(entry.variant_paths.values());
    for path in others {
        let (w, h) = dimensions(id, path)?;
        if (w, h) != (gw, gh) {
            return Err(ImagingError::DimensionMismatch {
                image_id: id.into(),
                path: path.clone(),
                expected_w: gw,
                expected_h: gh,
                actual_w: w,
                actual_h: h,
            });
        }
    }
    Ok(())
}

/// Scans `<root>/<image_id>/{gt,mask,masked}.png` plus
/// `variants/<name>.png` into a manifest ordered by image id.
pub fn build_manifest(root: impl AsRef<Path>, prep_params: PrepParams) -> Result<DatasetManifest, ImagingError> {
    let root = root.as_ref();
    let io_err = |source| ImagingError::Io {
        path: root.to_owned(),
        source,
    };
    let mut dirs: Vec<(String, PathBuf)> = Vec::new();
    for item in fs::read_dir(root).map_err(io_err)? {
        let item = item.map_err(io_err)?;
        let path = item.path();
        if path.is_dir() {
            dirs.push((item.file_name().to_string_lossy().into_owned(), path));
        }
    }
    dirs.sort();

    let mut entries = Vec::with_capacity(dirs.len());
    for (image_id, dir) in dirs {
        let ground_truth_path = dir.join(GROUND_TRUTH_FILE);
        if !ground_truth_path.is_file() {
            return Err(ImagingError::MissingGroundTruth(image_id));
        }
        let mut variant_paths = BTreeMap::new();
        let vdir = dir.join(VARIANTS_DIR);
        if vdir.is_dir() {
            for item in fs::read_dir(&vdir).map_err(|source| ImagingError::Io {
                path: vdir.clone(),
                source,
            })? {
                let path = item
                    .map_err(|source| ImagingError::Io {
                        path: vdir.clone(),
                        source,
                    })?
                    .path();
                let is_png = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"));
                if !is_png || !path.is_file() {
                    continue;
                }
                let name = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                if name == GROUND_TRUTH {
                    return Err(ImagingError::ReservedVariant(name));
                }
                variant_paths.insert(name, path);
            }
        }
        let entry = ManifestEntry {
            image_id,
            ground_truth_path,
            masked_path: dir.join(MASKED_FILE),
            mask_path: dir.join(MASK_FILE),
            variant_paths,
        };
        check_entry_dimensions(&entry)?;
        entries.push(entry);
    }
    Ok(DatasetManifest { entries, prep_params })
}
