//! Append-only NDJSON rating log, replayed on startup.
//!
//! Every acknowledged write has been `fsync`ed. A torn final line (crash
//! mid-append, never acknowledged) is truncated away on replay.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tonaleval::corpus::UtteranceId;
use tonaleval::stats::{Naturalness, RatingRecord, LONG_FORMAT_HEADER};

use crate::study::Study;
use crate::token::session_id;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("rating log {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("rating log line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error("rating log belongs to study {found:?} (seed {found_seed}), not {expected:?} (seed {expected_seed})")]
    StudyMismatch {
        expected: String,
        expected_seed: u64,
        found: String,
        found_seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum LogEvent {
    Study {
        study_id: String,
        seed: u64,
        n_stimuli: usize,
    },
    Session {
        session_id: String,
        subject_id: String,
    },
    Rating {
        session_id: String,
        stimulus: usize,
        naturalness: Naturalness,
        likert: u8,
        received_at: DateTime<Utc>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoredRating {
    pub record: RatingRecord,
    pub session_id: String,
    pub presentation_index: usize,
    pub received_at: DateTime<Utc>,
}

#[derive(Debug, Clone)]
pub struct Session {
    pub session_id: String,
    pub subject_id: String,
    pub order: Vec<usize>,
    position: Vec<usize>,
    /// Latest rating per presentation index.
    pub ratings: BTreeMap<usize, StoredRating>,
}

impl Session {
    fn new(study: &Study, subject_id: &str) -> Self {
        let order = study.presentation_order(subject_id);
        let mut position = vec![0; order.len()];
        for (p, &s) in order.iter().enumerate() {
            position[s] = p;
        }
        Session {
            session_id: session_id(study.key(), subject_id),
            subject_id: subject_id.to_string(),
            order,
            position,
            ratings: BTreeMap::new(),
        }
    }

    /// Presentation index of the next unrated stimulus.
    pub fn cursor(&self) -> usize {
        self.ratings.len()
    }

    pub fn total(&self) -> usize {
        self.order.len()
    }

    pub fn is_complete(&self) -> bool {
        self.cursor() == self.total()
    }

    pub fn current_stimulus(&self) -> Option<usize> {
        self.order.get(self.cursor()).copied()
    }

    pub fn position_of(&self, stimulus: usize) -> Option<usize> {
        self.position.get(stimulus).copied()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SubmitError {
    #[error("unknown session")]
    UnknownSession,
    #[error("token does not belong to this session")]
    ForeignToken,
    #[error("stimulus has not been presented yet")]
    NotPresented,
    #[error("this study does not allow revising a rating")]
    RevisionDisabled,
    #[error("likert must be an integer 1..=5")]
    Likert,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Ack {
    pub superseded: bool,
    pub completed: usize,
    pub total: usize,
    pub done: bool,
}

pub struct Store {
    path: PathBuf,
    file: File,
    sessions: BTreeMap<String, Session>,
    by_subject: BTreeMap<String, String>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl Store {
    /// Opens or creates the log and replays it against `study`.
    pub fn open(path: &Path, study: &Study) -> Result<Self, StoreError> {
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(path)
            .map_err(io_err(path))?;
        let mut store = Store {
            path: path.to_path_buf(),
            file: file.try_clone().map_err(io_err(path))?,
            sessions: BTreeMap::new(),
            by_subject: BTreeMap::new(),
        };

        file.seek(SeekFrom::Start(0)).map_err(io_err(path))?;
        let mut reader = BufReader::new(&file);
        let mut good_len = 0u64;
        let mut line_no = 0usize;
        let mut buf = Vec::new();
        let mut saw_header = false;
        loop {
            buf.clear();
            let n = reader.read_until(b'\n', &mut buf).map_err(io_err(path))?;
            if n == 0 {
                break;
            }
            line_no += 1;
            if buf.last() != Some(&b'\n') {
                tracing::warn!(line = line_no, bytes = n, "dropping torn final log line");
                break;
            }
            let event: LogEvent =
                serde_json::from_slice(&buf[..n - 1]).map_err(|e| StoreError::Corrupt {
                    line: line_no,
                    message: e.to_string(),
                })?;
            store.apply(study, event, line_no, &mut saw_header)?;
            good_len += n as u64;
        }
        drop(reader);
        if file.metadata().map_err(io_err(path))?.len() != good_len {
            file.set_len(good_len).map_err(io_err(path))?;
            file.sync_all().map_err(io_err(path))?;
        }
        if !saw_header {
            store.append(&LogEvent::Study {
                study_id: study.id().to_string(),
                seed: study.manifest.seed,
                n_stimuli: study.len(),
            })?;
        }
        tracing::info!(path = %path.display(), sessions = store.sessions.len(), ratings = store.n_ratings(), "rating log replayed");
        Ok(store)
    }

    fn apply(
        &mut self,
        study: &Study,
        event: LogEvent,
        line: usize,
        saw_header: &mut bool,
    ) -> Result<(), StoreError> {
        let corrupt = |message: &str| StoreError::Corrupt {
            line,
            message: message.to_string(),
        };
        match event {
            LogEvent::Study {
                study_id,
                seed,
                n_stimuli,
            } => {
                if *saw_header || line != 1 {
                    return Err(corrupt("study header must be the first line"));
                }
                if study_id != study.id() || seed != study.manifest.seed || n_stimuli != study.len()
                {
                    return Err(StoreError::StudyMismatch {
                        expected: study.id().to_string(),
                        expected_seed: study.manifest.seed,
                        found: study_id,
                        found_seed: seed,
                    });
                }
                *saw_header = true;
            }
            _ if !*saw_header => return Err(corrupt("missing study header")),
            LogEvent::Session {
                session_id,
                subject_id,
            } => {
                let s = Session::new(study, &subject_id);
                if s.session_id != session_id {
                    return Err(corrupt("session id does not match subject"));
                }
                self.insert_session(s);
            }
            LogEvent::Rating {
                session_id,
                stimulus,
                naturalness,
                likert,
                received_at,
            } => {
                if !(1..=5).contains(&likert) || stimulus >= study.len() {
                    return Err(corrupt("rating out of range"));
                }
                let session = self
                    .sessions
                    .get_mut(&session_id)
                    .ok_or_else(|| corrupt("rating for unknown session"))?;
                record_rating(study, session, stimulus, naturalness, likert, received_at);
            }
        }
        Ok(())
    }

    fn insert_session(&mut self, s: Session) {
        self.by_subject
            .insert(s.subject_id.clone(), s.session_id.clone());
        self.sessions.insert(s.session_id.clone(), s);
    }

    fn append(&mut self, event: &LogEvent) -> Result<(), StoreError> {
        let mut line = serde_json::to_vec(event).expect("log events serialize");
        line.push(b'\n');
        self.file.write_all(&line).map_err(io_err(&self.path))?;
        self.file.sync_data().map_err(io_err(&self.path))
    }

    pub fn session(&self, session_id: &str) -> Option<&Session> {
        self.sessions.get(session_id)
    }

    pub fn n_ratings(&self) -> usize {
        self.sessions.values().map(|s| s.ratings.len()).sum()
    }

    /// Returns the subject's session, creating (and persisting) it on first use.
    pub fn create_or_resume(
        &mut self,
        study: &Study,
        subject_id: &str,
    ) -> Result<(&Session, bool), StoreError> {
        if let Some(sid) = self.by_subject.get(subject_id) {
            return Ok((&self.sessions[sid], true));
        }
        let s = Session::new(study, subject_id);
        self.append(&LogEvent::Session {
            session_id: s.session_id.clone(),
            subject_id: subject_id.to_string(),
        })?;
        let sid = s.session_id.clone();
        self.insert_session(s);
        Ok((&self.sessions[&sid], false))
    }

    /// Validates, persists durably, then applies. Nothing changes on error.
    pub fn submit(
        &mut self,
        study: &Study,
        session_id: &str,
        stimulus: usize,
        naturalness: Naturalness,
        likert: u8,
        received_at: DateTime<Utc>,
    ) -> Result<Result<Ack, SubmitError>, StoreError> {
        let Some(session) = self.sessions.get(session_id) else {
            return Ok(Err(SubmitError::UnknownSession));
        };
        if !(1..=5).contains(&likert) {
            return Ok(Err(SubmitError::Likert));
        }
        let Some(p) = session.position_of(stimulus) else {
            return Ok(Err(SubmitError::ForeignToken));
        };
        if p > session.cursor() {
            return Ok(Err(SubmitError::NotPresented));
        }
        if p < session.cursor() && !study.manifest.allow_revision {
            return Ok(Err(SubmitError::RevisionDisabled));
        }
        self.append(&LogEvent::Rating {
            session_id: session_id.to_string(),
            stimulus,
            naturalness,
            likert,
            received_at,
        })?;
        let session = self.sessions.get_mut(session_id).expect("checked above");
        let superseded = record_rating(study, session, stimulus, naturalness, likert, received_at);
        Ok(Ok(Ack {
            superseded,
            completed: session.cursor(),
            total: session.total(),
            done: session.is_complete(),
        }))
    }

    /// Latest ratings ordered by subject, then presentation index.
    pub fn ratings(&self) -> impl Iterator<Item = &StoredRating> {
        self.by_subject
            .values()
            .flat_map(move |sid| self.sessions[sid].ratings.values())
    }

    /// Long-format CSV (`subject,sentence,type,mos,naturalness`).
    pub fn export_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(LONG_FORMAT_HEADER).expect("in-memory write");
        for r in self.ratings() {
            let rec = &r.record;
            w.write_record([
                rec.subject_id.as_str(),
                rec.utterance_id.raw(),
                rec.condition.as_str(),
                &rec.likert.to_string(),
                &rec.naturalness.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

/// Returns whether an earlier rating was replaced.
fn record_rating(
    study: &Study,
    session: &mut Session,
    stimulus: usize,
    naturalness: Naturalness,
    likert: u8,
    received_at: DateTime<Utc>,
) -> bool {
    let stim = &study.stimuli[stimulus];
    let p = session.position[stimulus];
    let record = RatingRecord {
        subject_id: session.subject_id.clone(),
        utterance_id: UtteranceId::clone(&stim.utterance_id),
        condition: stim.condition.clone(),
        naturalness,
        likert,
        timestamp: Some(received_at),
    };
    let stored = StoredRating {
        record,
        session_id: session.session_id.clone(),
        presentation_index: p,
        received_at,
    };
    let superseded = session.ratings.insert(p, stored).is_some();
    if superseded {
        tracing::info!(session = %session.session_id, presentation_index = p, "rating superseded by resubmission");
    }
    superseded
}
