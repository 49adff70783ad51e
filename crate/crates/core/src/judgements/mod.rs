//! Pairwise human judgements: storage format, verification-based participant
//! screening, win matrices and Bradley-Terry strength estimation.

mod bradley_terry;
mod filter;
mod record;
mod win_matrix;

pub use bradley_terry::{
    fit_bradley_terry, fit_strengths, log_likelihood, scores_to_scale, BtConfig, BtFit, ScaledScore,
    SubjectiveScoreTable,
};
pub use filter::{filter_valid_sessions, FilterOutcome};
pub use record::{
    read_judgements, read_verification_key, write_judgements, write_verification_key, PairwiseJudgement, Side,
    VerificationKey, JUDGEMENT_CSV_HEADER, VERIFICATION_KEY_CSV_HEADER,
};
pub use win_matrix::{build_win_matrix, WinMatrix};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum JudgementError {
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("judgement compares '{0}' with itself")]
    SelfComparison(String),
    #[error(
        "verification judgement of session '{session_id}' on image '{image_id}' ({left} vs {right}) has no key entry"
    )]
    MissingKey {
        session_id: String,
        image_id: String,
        left: String,
        right: String,
    },
    #[error("verification key entry for '{image_id}' names '{correct}', which is not one of the pair")]
    BadKeyEntry { image_id: String, correct: String },
    #[error("comparison graph of image '{image_id}' is disconnected: {components:?}")]
    Disconnected {
        image_id: String,
        components: Vec<Vec<String>>,
    },
    #[error("variant '{variant}' of image '{image_id}' never wins; its strength has no finite estimate (use a positive pseudo-count)")]
    NeverWins { image_id: String, variant: String },
    #[error("no variants to fit for image '{0}'")]
    NoVariants(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Outcome of screening and per-image fitting over a whole study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub passing_sessions: usize,
    pub excluded_sessions: Vec<String>,
    pub retained_judgements: usize,
    pub tables: BTreeMap<String, SubjectiveScoreTable>,
    /// Images whose fit failed, with the reason.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub failures: BTreeMap<String, String>,
}

impl FitReport {
    pub fn unconverged(&self) -> Vec<&str> {
        self.tables
            .values()
            .filter(|t| !t.converged)
            .map(|t| t.image_id.as_str())
            .collect()
    }
}

/// Screens sessions with the verification key, then fits one Bradley-Terry
/// model per image over the surviving judgements.
pub fn fit_study(
    judgements: &[PairwiseJudgement],
    key: &VerificationKey,
    config: &BtConfig,
) -> Result<FitReport, JudgementError> {
    let outcome = filter_valid_sessions(judgements, key)?;
    let images: BTreeSet<&str> = outcome.valid.iter().map(|j| j.image_id.as_str()).collect();
    let mut tables = BTreeMap::new();
    let mut failures = BTreeMap::new();
    for image_id in images {
        let matrix = build_win_matrix(&outcome.valid, image_id);
        match fit_bradley_terry(&matrix, config) {
            Ok(t) => {
                tables.insert(image_id.to_owned(), t);
            }
            Err(e) => {
                failures.insert(image_id.to_owned(), e.to_string());
            }
        }
    }
    Ok(FitReport {
        passing_sessions: outcome.passing_sessions,
        excluded_sessions: outcome.excluded_sessions,
        retained_judgements: outcome.valid.len(),
        tables,
        failures,
    })
}
