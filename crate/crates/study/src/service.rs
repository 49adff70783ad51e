use std::collections::HashMap;
use std::path::{Path, PathBuf};

use chrono::Utc;
use inpaint_eval_core::judgements::{
    write_judgements, write_verification_key, PairwiseJudgement, Side, VerificationKey,
};
use parking_lot::RwLock;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::http::{ChoiceAck, NextPair, PairView, SessionCreated};
use crate::{EventLog, LogEvent, PairAssignment, Scheduler, Session, StudyConfig, StudyError};

/// Sessions and judgements rebuilt from log events.
#[derive(Clone, Debug, Default)]
pub struct StudyState {
    sessions: Vec<Session>,
    by_id: HashMap<String, usize>,
    pairs: HashMap<String, (usize, usize)>,
    judgements: Vec<PairwiseJudgement>,
}

impl StudyState {
    pub fn from_events(events: impl IntoIterator<Item = LogEvent>) -> Result<Self, String> {
        let mut state = StudyState::default();
        for (i, e) in events.into_iter().enumerate() {
            state.apply(e).map_err(|err| format!("event {}: {err}", i + 1))?;
        }
        Ok(state)
    }

    fn check_choice(&self, session_id: &str, pair_id: &str) -> Result<usize, StudyError> {
        let &s = self
            .by_id
            .get(session_id)
            .ok_or_else(|| StudyError::UnknownSession(session_id.into()))?;
        let session = &self.sessions[s];
        match session.schedule.get(session.cursor) {
            Some(current) if current.pair_id == pair_id => Ok(s),
            current => {
                let answered = session.schedule[..session.cursor].iter().any(|p| p.pair_id == pair_id);
                if answered {
                    Err(StudyError::AlreadyAnswered {
                        pair_id: pair_id.into(),
                    })
                } else {
                    Err(StudyError::PairMismatch {
                        expected: current.map(|p| p.pair_id.clone()),
                        got: pair_id.into(),
                    })
                }
            }
        }
    }

    fn apply(&mut self, event: LogEvent) -> Result<(), StudyError> {
        match event {
            LogEvent::SessionCreated { session } => {
                if self.by_id.contains_key(&session.session_id) {
                    return Err(StudyError::Config(format!("duplicate session {}", session.session_id)));
                }
                let s = self.sessions.len();
                for (k, p) in session.schedule.iter().enumerate() {
                    if self.pairs.insert(p.pair_id.clone(), (s, k)).is_some() {
                        return Err(StudyError::Config(format!("duplicate pair {}", p.pair_id)));
                    }
                }
                self.by_id.insert(session.session_id.clone(), s);
                self.sessions.push(session);
            }
            LogEvent::ChoiceRecorded {
                session_id,
                pair_id,
                chosen,
                timestamp,
            } => {
                let s = self.check_choice(&session_id, &pair_id)?;
                let session = &mut self.sessions[s];
                let p = &session.schedule[session.cursor];
                self.judgements.push(PairwiseJudgement {
                    session_id,
                    image_id: p.image_id.clone(),
                    left_variant: p.left_variant.clone(),
                    right_variant: p.right_variant.clone(),
                    chosen,
                    is_verification: p.is_verification,
                    timestamp,
                });
                session.cursor += 1;
                session.completed = session.cursor == session.schedule.len();
            }
        }
        Ok(())
    }

    pub fn sessions(&self) -> &[Session] {
        &self.sessions
    }

    pub fn session(&self, session_id: &str) -> Option<&Session> {
        self.by_id.get(session_id).map(|&s| &self.sessions[s])
    }

    pub fn assignment(&self, pair_id: &str) -> Option<&PairAssignment> {
        self.pairs.get(pair_id).map(|&(s, k)| &self.sessions[s].schedule[k])
    }

    /// Recorded judgements in the order they were accepted.
    pub fn judgements(&self) -> &[PairwiseJudgement] {
        &self.judgements
    }

    /// Every verification pair issued so far, answered or not.
    pub fn verification_key(&self) -> VerificationKey {
        let mut key = VerificationKey::default();
        for p in self.sessions.iter().flat_map(|s| &s.schedule) {
            if let Some(side) = p.correct_side {
                key.insert(&p.image_id, &p.left_variant, &p.right_variant, p.variant(side))
                    .expect("correct variant is one of the pair");
            }
        }
        key
    }

    pub fn judgements_csv(&self) -> Result<Vec<u8>, StudyError> {
        let mut out = Vec::new();
        write_judgements(&self.judgements, &mut out)?;
        Ok(out)
    }

    pub fn verification_key_csv(&self) -> Result<Vec<u8>, StudyError> {
        let mut out = Vec::new();
        write_verification_key(&self.verification_key(), &mut out)?;
        Ok(out)
    }
}

struct Inner {
    state: StudyState,
    scheduler: Scheduler,
    log: EventLog,
}

/// The running study. Mutations take the write lock and are appended to
/// the log before they become visible; reads share the read lock.
pub struct Study {
    config: StudyConfig,
    seed: u64,
    inner: RwLock<Inner>,
}

impl Study {
    /// Opens the study over `log_path`, replaying whatever it holds.
    /// Session `n` draws from a generator seeded by `(seed, n)`, so a
    /// restart continues the same sequence.
    pub fn open(config: StudyConfig, log_path: impl AsRef<Path>, seed: Option<u64>) -> Result<Self, StudyError> {
        config.validate()?;
        let (log, events) = EventLog::open(log_path)?;
        let path = log.path().to_owned();
        let mut state = StudyState::default();
        for (i, e) in events.into_iter().enumerate() {
            state.apply(e).map_err(|err| StudyError::CorruptLog {
                path: path.clone(),
                line: i + 1,
                reason: err.to_string(),
            })?;
        }
        let mut scheduler = Scheduler::new(&config);
        for p in state.sessions.iter().flat_map(|s| &s.schedule) {
            scheduler.record(p);
        }
        tracing::info!(
            sessions = state.sessions.len(),
            judgements = state.judgements.len(),
            log = %path.display(),
            "study opened"
        );
        let seed = seed.unwrap_or_else(rand::random);
        Ok(Study {
            config,
            seed,
            inner: RwLock::new(Inner { state, scheduler, log }),
        })
    }

    pub fn config(&self) -> &StudyConfig {
        &self.config
    }

    pub fn create_session(&self) -> Result<SessionCreated, StudyError> {
        let mut inner = self.inner.write();
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(inner.state.sessions.len() as u64);
        let session = inner.scheduler.build_session(&self.config, &mut rng, Utc::now());
        let event = LogEvent::SessionCreated { session };
        inner.log.append(&event)?;
        let LogEvent::SessionCreated { session } = event else {
            unreachable!()
        };
        for p in &session.schedule {
            inner.scheduler.record(p);
        }
        let created = SessionCreated {
            session_id: session.session_id.clone(),
            total_pairs: session.schedule.len(),
        };
        inner.state.apply(LogEvent::SessionCreated { session })?;
        Ok(created)
    }

    /// Current pair, without advancing.
    pub fn next_pair(&self, session_id: &str) -> Result<NextPair, StudyError> {
        let inner = self.inner.read();
        let session = inner
            .state
            .session(session_id)
            .ok_or_else(|| StudyError::UnknownSession(session_id.into()))?;
        Ok(match session.schedule.get(session.cursor) {
            None => NextPair::Done { done: true },
            Some(p) => NextPair::Pair(PairView {
                pair_id: p.pair_id.clone(),
                image_id: p.image_id.clone(),
                left_url: format!("/api/image/{}/left", p.pair_id),
                right_url: format!("/api/image/{}/right", p.pair_id),
                index: session.cursor,
                total: session.schedule.len(),
            }),
        })
    }

    pub fn record_choice(&self, session_id: &str, pair_id: &str, chosen: Side) -> Result<ChoiceAck, StudyError> {
        let mut inner = self.inner.write();
        inner.state.check_choice(session_id, pair_id)?;
        let event = LogEvent::ChoiceRecorded {
            session_id: session_id.into(),
            pair_id: pair_id.into(),
            chosen,
            timestamp: Utc::now(),
        };
        inner.log.append(&event)?;
        inner.state.apply(event)?;
        let session = inner.state.session(session_id).expect("checked above");
        Ok(ChoiceAck {
            index: session.cursor,
            total: session.schedule.len(),
            done: session.completed,
        })
    }

    /// File behind one side of an issued pair.
    pub fn image_path(&self, pair_id: &str, side: Side) -> Option<PathBuf> {
        let inner = self.inner.read();
        let p = inner.state.assignment(pair_id)?;
        let entry = self.config.manifest.entry(&p.image_id)?;
        entry.path_for(p.variant(side)).map(Path::to_owned)
    }

    /// Read access to the replayed state.
    pub fn with_state<T>(&self, f: impl FnOnce(&StudyState) -> T) -> T {
        f(&self.inner.read().state)
    }

    pub fn presentation_counts(&self) -> Vec<(crate::Combo, u64)> {
        self.inner
            .read()
            .scheduler
            .counts()
            .map(|(c, n)| (c.clone(), n))
            .collect()
    }
}
