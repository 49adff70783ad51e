//! Bradley-Terry strengths by minorization-maximization.
//!
//! Each sweep applies `π_i ← W_i / Σ_{j≠i} n_ij / (π_i + π_j)` to all
//! variants simultaneously (using the previous iterate), then rescales so
//! the strengths sum to one. `W_i` and `n_ij` include the pseudo-count added
//! to every ordered pair. The log-likelihood never decreases across sweeps.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{JudgementError, WinMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BtConfig {
    /// Added to every ordered pair's win count.
    pub pseudo_count: f64,
    /// Stop once the largest change of `ln π` in a sweep falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Record the log-likelihood after every sweep.
    #[serde(default)]
    pub trace_likelihood: bool,
}

impl Default for BtConfig {
    fn default() -> Self {
        Self {
            pseudo_count: 0.1,
            tolerance: 1e-10,
            max_iterations: 10_000,
            trace_likelihood: false,
        }
    }
}

impl BtConfig {
    pub fn validate(&self) -> Result<(), JudgementError> {
        if !(self.pseudo_count >= 0.0 && self.pseudo_count.is_finite()) {
            return Err(JudgementError::InvalidConfig(
                "pseudo-count must be finite and non-negative".into(),
            ));
        }
        if !(self.tolerance > 0.0) {
            return Err(JudgementError::InvalidConfig("tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(JudgementError::InvalidConfig(
                "max_iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BtFit {
    /// Sum-to-one strengths aligned with `WinMatrix::variants`.
    pub strengths: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood at the start and after each sweep, when traced.
    pub log_likelihoods: Vec<f64>,
}

/// Fitted strengths of one image's variants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectiveScoreTable {
    pub image_id: String,
    pub strengths: BTreeMap<String, f64>,
    pub iterations: usize,
    /// False when the iteration limit was hit; strengths are the last iterate.
    pub converged: bool,
}

/// Regularized log-likelihood `Σ_{i≠j} w'_ij (ln π_i − ln(π_i + π_j))`.
pub fn log_likelihood(matrix: &WinMatrix, strengths: &[f64], pseudo_count: f64) -> f64 {
    let m = matrix.len();
    let mut ll = 0.0;
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let w = matrix.wins[i][j] as f64 + pseudo_count;
            if w > 0.0 {
                ll += w * (strengths[i].ln() - (strengths[i] + strengths[j]).ln());
            }
        }
    }
    ll
}

fn components(matrix: &WinMatrix, pseudo_count: f64) -> Vec<Vec<usize>> {
    let m = matrix.len();
    let mut seen = vec![false; m];
    let mut out = Vec::new();
    for start in 0..m {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut comp = vec![];
        while let Some(i) = stack.pop() {
            comp.push(i);
            for j in 0..m {
                if !seen[j] && j != i && matrix.comparisons(i, j) as f64 + 2.0 * pseudo_count > 0.0 {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Maximum-likelihood strengths for `matrix`.
pub fn fit_strengths(matrix: &WinMatrix, config: &BtConfig) -> Result<BtFit, JudgementError> {
    config.validate()?;
    let m = matrix.len();
    if m == 0 {
        return Err(JudgementError::NoVariants(matrix.image_id.clone()));
    }
    let eps = config.pseudo_count;
    let comps = components(matrix, eps);
    if comps.len() > 1 {
        return Err(JudgementError::Disconnected {
            image_id: matrix.image_id.clone(),
            components: comps
                .into_iter()
                .map(|c| c.into_iter().map(|i| matrix.variants[i].clone()).collect())
                .collect(),
        });
    }

    let eff_wins: Vec<f64> = (0..m)
        .map(|i| (0..m).filter(|&j| j != i).map(|j| matrix.wins[i][j] as f64 + eps).sum())
        .collect();
    if m > 1 {
        if let Some(i) = eff_wins.iter().position(|&w| w <= 0.0) {
            return Err(JudgementError::NeverWins {
                image_id: matrix.image_id.clone(),
                variant: matrix.variants[i].clone(),
            });
        }
    }
    let pairs: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        matrix.comparisons(i, j) as f64 + 2.0 * eps
                    }
                })
                .collect()
        })
        .collect();

    let mut strengths = vec![1.0 / m as f64; m];
    let track = config.trace_likelihood || cfg!(debug_assertions);
    let mut trace = Vec::new();
    let mut last_ll = log_likelihood(matrix, &strengths, eps);
    if config.trace_likelihood {
        trace.push(last_ll);
    }
    if m == 1 {
        return Ok(BtFit {
            strengths,
            iterations: 0,
            converged: true,
            log_likelihoods: trace,
        });
    }

    let mut next = vec![0.0; m];
    for iteration in 1..=config.max_iterations {
        for i in 0..m {
            let denom: f64 = (0..m)
                .filter(|&j| j != i && pairs[i][j] > 0.0)
                .map(|j| pairs[i][j] / (strengths[i] + strengths[j]))
                .sum();
            next[i] = eff_wins[i] / denom;
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|p| *p /= total);

        let max_step = next
            .iter()
            .zip(&strengths)
            .map(|(a, b)| (a.ln() - b.ln()).abs())
            .fold(0.0f64, f64::max);
        std::mem::swap(&mut strengths, &mut next);

        if track {
            let ll = log_likelihood(matrix, &strengths, eps);
            debug_assert!(
                ll >= last_ll - 1e-9 * last_ll.abs().max(1.0),
                "likelihood decreased at sweep {iteration}: {last_ll} -> {ll}"
            );
            last_ll = ll;
            if config.trace_likelihood {
                trace.push(ll);
            }
        }
        if max_step < config.tolerance {
            return Ok(BtFit {
                strengths,
                iterations: iteration,
                converged: true,
                log_likelihoods: trace,
            });
        }
    }
    tracing::warn!(
        image_id = %matrix.image_id,
        iterations = config.max_iterations,
        "Bradley-Terry fit did not converge; returning last iterate"
    );
    Ok(BtFit {
        strengths,
        iterations: config.max_iterations,
        converged: false,
        log_likelihoods: trace,
    })
}

pub fn fit_bradley_terry(matrix: &WinMatrix, config: &BtConfig) -> Result<SubjectiveScoreTable, JudgementError> {
    let fit = fit_strengths(matrix, config)?;
    Ok(SubjectiveScoreTable {
        image_id: matrix.image_id.clone(),
        strengths: matrix.variants.iter().cloned().zip(fit.strengths).collect(),
        iterations: fit.iterations,
        converged: fit.converged,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledScore {
    pub strength: f64,
    /// `ln π` shifted so the strongest variant sits at 0.
    pub log_score: f64,
}

pub fn scores_to_scale(table: &SubjectiveScoreTable) -> BTreeMap<String, ScaledScore> {
    let max_log = table
        .strengths
        .values()
        .map(|p| p.ln())
        .fold(f64::NEG_INFINITY, f64::max);
    table
        .strengths
        .iter()
        .map(|(v, &p)| {
            (
                v.clone(),
                ScaledScore {
                    strength: p,
                    log_score: p.ln() - max_log,
                },
            )
        })
        .collect()
}
