use std::collections::BTreeSet;

use super::{JudgementError, PairwiseJudgement, VerificationKey};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FilterOutcome {
    /// Non-verification judgements of passing sessions, in input order.
    pub valid: Vec<PairwiseJudgement>,
    /// Sessions with at least one wrong verification answer, sorted.
    pub excluded_sessions: Vec<String>,
    pub passing_sessions: usize,
}

/// Drops every session that answered any verification question wrongly,
/// and strips verification judgements from the rest.
pub fn filter_valid_sessions(
    judgements: &[PairwiseJudgement],
    key: &VerificationKey,
) -> Result<FilterOutcome, JudgementError> {
    let mut sessions = BTreeSet::new();
    let mut failed = BTreeSet::new();
    for j in judgements {
        sessions.insert(j.session_id.as_str());
        if !j.is_verification {
            continue;
        }
        let correct = key.correct_side(j).ok_or_else(|| JudgementError::MissingKey {
            session_id: j.session_id.clone(),
            image_id: j.image_id.clone(),
            left: j.left_variant.clone(),
            right: j.right_variant.clone(),
        })?;
        if j.chosen != correct {
            failed.insert(j.session_id.as_str());
        }
    }
    let valid = judgements
        .iter()
        .filter(|j| !j.is_verification && !failed.contains(j.session_id.as_str()))
        .cloned()
        .collect();
    Ok(FilterOutcome {
        valid,
        passing_sessions: sessions.len() - failed.len(),
        excluded_sessions: failed.into_iter().map(str::to_owned).collect(),
    })
}
