//! Pairwise subjective study: balanced pair scheduling with embedded
//! verification questions, durable judgement recording, and export in the
//! judgements file formats.

mod config;
mod http;
mod log;
mod schedule;
mod service;

pub use config::{ServerConfig, StudyConfig, BIND_ENV, TOKEN_ENV};
pub use http::{router, serve, ChoiceAck, ChoiceRequest, NextPair, PairView, SessionCreated};
pub use log::{read_events, EventLog, LogEvent};
pub use schedule::{Combo, PairAssignment, Scheduler, Session};
pub use service::{Study, StudyState};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error("invalid study configuration: {0}")]
    Config(String),
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("unknown pair {0}")]
    UnknownPair(String),
    #[error("pair {pair_id} was already answered")]
    AlreadyAnswered { pair_id: String },
    #[error("pair {got} is not the current pair (expected {})", .expected.as_deref().unwrap_or("none, session is complete"))]
    PairMismatch { expected: Option<String>, got: String },
    #[error("event log {path}: {source}")]
    Log { path: PathBuf, source: std::io::Error },
    #[error("event log {path} line {line}: {reason}")]
    CorruptLog { path: PathBuf, line: usize, reason: String },
    #[error(transparent)]
    Imaging(#[from] inpaint_eval_core::imaging::ImagingError),
    #[error(transparent)]
    Judgement(#[from] inpaint_eval_core::judgements::JudgementError),
}
