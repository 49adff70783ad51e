use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use inpaint_eval_core::imaging::DatasetManifest;
use inpaint_eval_core::GROUND_TRUTH;
use serde::{Deserialize, Serialize};

use crate::StudyError;

pub const BIND_ENV: &str = "INPAINT_EVAL_BIND";
pub const TOKEN_ENV: &str = "INPAINT_EVAL_OPERATOR_TOKEN";

/// What the study asks participants to compare.
#[derive(Clone, Debug)]
pub struct StudyConfig {
    pub manifest: DatasetManifest,
    /// Variants paired against each other, normally including ground truth.
    pub variants_under_test: Vec<String>,
    /// Regular (non-verification) pairs per session.
    pub pairs_per_session: usize,
    pub verification_pairs_per_session: usize,
    /// Shown against ground truth in verification pairs; ground truth is
    /// the correct pick.
    pub verification_weak_variant: String,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<(), StudyError> {
        let err = |m: String| Err(StudyError::Config(m));
        if self.manifest.entries.is_empty() {
            return err("manifest has no images".into());
        }
        let distinct: BTreeSet<&str> = self.variants_under_test.iter().map(String::as_str).collect();
        if distinct.len() != self.variants_under_test.len() {
            return err("variants_under_test contains duplicates".into());
        }
        if distinct.len() < 2 {
            return err("at least two variants are needed to form a pair".into());
        }
        if self.pairs_per_session == 0 {
            return err("pairs_per_session must be at least 1".into());
        }
        if self.verification_pairs_per_session > self.pairs_per_session {
            return err("verification_pairs_per_session exceeds pairs_per_session".into());
        }
        if self.verification_weak_variant == GROUND_TRUTH {
            return err("the verification weak variant cannot be ground truth".into());
        }
        for entry in &self.manifest.entries {
            for v in self.variants_under_test.iter().chain([&self.verification_weak_variant]) {
                if entry.path_for(v).is_none() {
                    return err(format!("variant '{v}' missing for image '{}'", entry.image_id));
                }
            }
        }
        Ok(())
    }

    pub fn total_pairs(&self) -> usize {
        self.pairs_per_session + self.verification_pairs_per_session
    }
}

fn default_verification_pairs() -> usize {
    2
}

fn default_bind() -> String {
    "127.0.0.1:8080".into()
}

/// On-disk service configuration. Relative paths are resolved against the
/// config file's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ServerConfig {
    pub manifest: PathBuf,
    pub variants_under_test: Vec<String>,
    pub pairs_per_session: usize,
    #[serde(default = "default_verification_pairs")]
    pub verification_pairs_per_session: usize,
    pub verification_weak_variant: String,
    /// Append-only judgement log.
    pub log_path: PathBuf,
    #[serde(default = "default_bind")]
    pub bind: String,
    #[serde(default)]
    pub operator_token: Option<String>,
    /// Frontend assets served at `/`.
    #[serde(default)]
    pub static_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl ServerConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, StudyError> {
        let path = path.as_ref();
        let text =
            fs::read_to_string(path).map_err(|e| StudyError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: ServerConfig =
            serde_json::from_str(&text).map_err(|e| StudyError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.manifest);
        resolve(&mut cfg.log_path);
        if let Some(dir) = cfg.static_dir.as_mut() {
            resolve(dir);
        }
        Ok(cfg)
    }

    /// Applies the bind address and operator token overrides.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) {
        if let Some(bind) = lookup(BIND_ENV) {
            self.bind = bind;
        }
        if let Some(token) = lookup(TOKEN_ENV) {
            self.operator_token = Some(token);
        }
    }

    pub fn study_config(&self) -> Result<StudyConfig, StudyError> {
        let manifest = DatasetManifest::load(&self.manifest)?;
        let cfg = StudyConfig {
            manifest,
            variants_under_test: self.variants_under_test.clone(),
            pairs_per_session: self.pairs_per_session,
            verification_pairs_per_session: self.verification_pairs_per_session,
            verification_weak_variant: self.verification_weak_variant.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths_and_env_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("study.json");
        fs::write(
            &path,
            r#"{"manifest": "data/manifest.json", "variants_under_test": ["a", "b"],
                "pairs_per_session": 22, "verification_weak_variant": "exemplar",
                "log_path": "/var/log/study.jsonl", "operator_token": "file"}"#,
        )
        .unwrap();
        let mut cfg = ServerConfig::load(&path).unwrap();
        assert_eq!(cfg.manifest, dir.path().join("data/manifest.json"));
        assert_eq!(cfg.log_path, PathBuf::from("/var/log/study.jsonl"));
        assert_eq!(cfg.verification_pairs_per_session, 2);
        assert_eq!(cfg.bind, "127.0.0.1:8080");
        cfg.apply_env(|k| (k == TOKEN_ENV).then(|| "env".to_string()));
        assert_eq!(cfg.operator_token.as_deref(), Some("env"));
        assert_eq!(cfg.bind, "127.0.0.1:8080");
        cfg.apply_env(|k| (k == BIND_ENV).then(|| "0.0.0.0:9000".to_string()));
        assert_eq!(cfg.bind, "0.0.0.0:9000");
    }
}
