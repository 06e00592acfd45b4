use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use tonaleval::corpus::UtteranceId;
use tonaleval::signal::{read_wav, write_wav};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("manifest: {0}")]
    Json(#[from] serde_json::Error),
    #[error("study has no stimuli")]
    Empty,
    #[error("stimulus ({utterance}, {condition}) listed twice")]
    DuplicateStimulus {
        utterance: String,
        condition: String,
    },
    #[error("stimulus {utterance} uses undeclared condition {condition}")]
    UnknownCondition {
        utterance: String,
        condition: String,
    },
    #[error("missing audio files: {}", .0.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    MissingAudio(Vec<PathBuf>),
    #[error("unreadable audio {path}: {message}")]
    BadAudio { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StimulusEntry {
    pub id: UtteranceId,
    pub condition: String,
    /// Relative paths resolve against the manifest's directory.
    pub audio: PathBuf,
}

fn yes() -> bool {
    true
}

/// On-disk study definition (JSON).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyManifest {
    pub study_id: String,
    pub seed: u64,
    pub conditions: Vec<String>,
    /// Listeners may resubmit an earlier stimulus; the latest rating wins.
    #[serde(default = "yes")]
    pub allow_revision: bool,
    /// Audio may be fetched more than once.
    #[serde(default = "yes")]
    pub allow_replay: bool,
    pub stimuli: Vec<StimulusEntry>,
}

#[derive(Debug, Clone)]
pub struct Stimulus {
    pub utterance_id: UtteranceId,
    pub condition: String,
    pub audio_path: PathBuf,
    /// Re-encoded PCM with every non-audio chunk dropped.
    pub audio: Arc<[u8]>,
}

#[derive(Debug)]
pub struct Study {
    pub manifest: StudyManifest,
    pub stimuli: Vec<Stimulus>,
    key: [u8; 32],
}

impl Study {
    pub fn load(path: &Path, secret: &[u8]) -> Result<Self, StudyError> {
        Self::load_with_seed(path, secret, None)
    }

    /// As [`Study::load`], replacing the manifest's seed when `seed` is given.
    pub fn load_with_seed(
        path: &Path,
        secret: &[u8],
        seed: Option<u64>,
    ) -> Result<Self, StudyError> {
        let text = std::fs::read_to_string(path).map_err(|source| StudyError::Io {
            path: path.into(),
            source,
        })?;
        let mut manifest: StudyManifest = serde_json::from_str(&text)?;
        if let Some(seed) = seed {
            manifest.seed = seed;
        }
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_manifest(manifest, base, secret)
    }

    pub fn from_manifest(
        manifest: StudyManifest,
        base: &Path,
        secret: &[u8],
    ) -> Result<Self, StudyError> {
        if manifest.stimuli.is_empty() {
            return Err(StudyError::Empty);
        }
        let declared: BTreeSet<&str> = manifest.conditions.iter().map(String::as_str).collect();
        let mut seen = BTreeSet::new();
        let mut missing = Vec::new();
        for s in &manifest.stimuli {
            if !declared.contains(s.condition.as_str()) {
                return Err(StudyError::UnknownCondition {
                    utterance: s.id.to_string(),
                    condition: s.condition.clone(),
                });
            }
            if !seen.insert((&s.id, &s.condition)) {
                return Err(StudyError::DuplicateStimulus {
                    utterance: s.id.to_string(),
                    condition: s.condition.clone(),
                });
            }
            let p = base.join(&s.audio);
            if !p.is_file() {
                missing.push(p);
            }
        }
        if !missing.is_empty() {
            return Err(StudyError::MissingAudio(missing));
        }
        let mut stimuli = Vec::with_capacity(manifest.stimuli.len());
        for s in &manifest.stimuli {
            let audio_path = base.join(&s.audio);
            let bytes = std::fs::read(&audio_path).map_err(|source| StudyError::Io {
                path: audio_path.clone(),
                source,
            })?;
            let buf = read_wav::<f32>(&bytes).map_err(|e| StudyError::BadAudio {
                path: audio_path.clone(),
                message: e.to_string(),
            })?;
            stimuli.push(Stimulus {
                utterance_id: s.id.clone(),
                condition: s.condition.clone(),
                audio_path,
                audio: write_wav(&buf).into(),
            });
        }
        let key = derive_key(&manifest.study_id, manifest.seed, secret);
        Ok(Study {
            manifest,
            stimuli,
            key,
        })
    }

    pub fn id(&self) -> &str {
        &self.manifest.study_id
    }

    pub fn len(&self) -> usize {
        self.stimuli.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stimuli.is_empty()
    }

    pub(crate) fn key(&self) -> &[u8; 32] {
        &self.key
    }

    /// The token a session would be shown for `stimulus`.
    pub fn mint_token(&self, session_id: &str, stimulus: usize) -> String {
        crate::token::encode_token(&self.key, session_id, stimulus)
    }

    /// Presentation order for a subject: a Fisher-Yates shuffle driven by
    /// ChaCha20 seeded from `sha256(seed || subject)`.
    pub fn presentation_order(&self, subject_id: &str) -> Vec<usize> {
        let digest = Sha256::new()
            .chain_update(b"tonaleval-order\0")
            .chain_update(self.manifest.seed.to_le_bytes())
            .chain_update(subject_id.as_bytes())
            .finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        let mut rng = ChaCha20Rng::from_seed(seed);
        let mut order: Vec<usize> = (0..self.stimuli.len()).collect();
        order.shuffle(&mut rng);
        order
    }
}

fn derive_key(study_id: &str, seed: u64, secret: &[u8]) -> [u8; 32] {
    let digest = Sha256::new()
        .chain_update(b"tonaleval-key\0")
        .chain_update(study_id.as_bytes())
        .chain_update([0u8])
        .chain_update(seed.to_le_bytes())
        .chain_update(secret)
        .finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    key
}
