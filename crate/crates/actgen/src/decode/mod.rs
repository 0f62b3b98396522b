//! Autoregressive decoding for both heads: greedy and beam search,
//! task-knowledge vocabulary masking at the logit level, and grouping of
//! decoded action tokens back into steps.

mod detok;
mod search;

pub use detok::{detokenize_actions, DetokWarning};
pub use search::{decode_sequence, Decoded};

use crate::data::{DataError, Vocab, EOS, SPECIALS};
use crate::model::ModelError;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DecodeError>;

/// Task knowledge: which objects are actually on the workbench (and
/// optionally which verbs the robot can perform). Anything outside these
/// sets is masked out of the action vocabulary during decoding.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskKnowledge {
    pub allowed_nouns: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed_verbs: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

impl TaskKnowledge {
    pub fn from_bench(objects: impl IntoIterator<Item = String>) -> Self {
        TaskKnowledge {
            allowed_nouns: objects.into_iter().collect(),
            allowed_verbs: None,
            id: None,
        }
    }

    /// Action-vocabulary token ids this mask excludes. Only noun (and,
    /// when a verb set is given, verb) class tokens are ever excluded;
    /// specials such as `<eos>` are untouched by construction.
    pub fn excluded_ids(&self, vocab: &Vocab) -> Result<Vec<usize>> {
        for n in &self.allowed_nouns {
            if !vocab.nouns.contains(n) {
                return Err(DecodeError::Config(format!(
                    "task knowledge names unknown noun `{n}`"
                )));
            }
        }
        if let Some(verbs) = &self.allowed_verbs {
            for v in verbs {
                if !vocab.verbs.contains(v) {
                    return Err(DecodeError::Config(format!(
                        "task knowledge names unknown verb `{v}`"
                    )));
                }
            }
        }
        let mut out = Vec::new();
        for id in vocab.noun_token_range() {
            if !self.allowed_nouns.contains(vocab.action_token_name(id)) {
                out.push(id);
            }
        }
        if let Some(verbs) = &self.allowed_verbs {
            for id in vocab.verb_token_range() {
                if !verbs.contains(vocab.action_token_name(id)) {
                    out.push(id);
                }
            }
        }
        Ok(out)
    }
}

/// Push excluded token logits to negative infinity so their probability
/// is exactly zero after the softmax; remaining mass renormalizes over
/// the allowed tokens.
pub fn apply_task_mask(logits: &mut [f64], mask: &TaskKnowledge, vocab: &Vocab) -> Result<()> {
    if logits.len() != vocab.action_vocab_size() {
        return Err(DecodeError::Config(format!(
            "mask applies to the action vocabulary ({} tokens), got {} logits",
            vocab.action_vocab_size(),
            logits.len()
        )));
    }
    let excluded = mask.excluded_ids(vocab)?;
    for id in excluded {
        if id < SPECIALS || id == EOS {
            return Err(DecodeError::Config(format!(
                "mask may not exclude special token id {id}"
            )));
        }
        logits[id] = f64::NEG_INFINITY;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Greedy,
    Beam,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecodeConfig {
    pub strategy: Strategy,
    pub beam_width: usize,
    pub max_len: usize,
    /// Completed hypotheses are ranked by `logp / len^length_penalty`
    /// when the penalty is positive; zero ranks by raw log-probability.
    pub length_penalty: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<TaskKnowledge>,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            strategy: Strategy::Beam,
            beam_width: 4,
            max_len: 16,
            length_penalty: 0.0,
            mask: None,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beam_width == 0 {
            return Err(DecodeError::Config("beam width must be at least 1".into()));
        }
        if self.max_len == 0 {
            return Err(DecodeError::Config("max length must be at least 1".into()));
        }
        if self.length_penalty < 0.0 {
            return Err(DecodeError::Config("length penalty must be >= 0".into()));
        }
        Ok(())
    }
}

/// One decoded segment as written to the decoded-output JSON-lines file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecodedRecord {
    pub video_id: String,
    pub segment_index: usize,
    pub tokens: Vec<String>,
    pub steps: crate::data::ActionSequence,
    pub score: f64,
    pub truncated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_id: Option<String>,
}

pub fn write_decoded(path: &std::path::Path, records: &[DecodedRecord]) -> Result<()> {
    use std::io::Write;
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| DecodeError::Config(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_decoded(path: &std::path::Path) -> Result<Vec<DecodedRecord>> {
    use std::io::BufRead;
    let r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| DecodeError::Config(e.to_string()))?);
    }
    Ok(out)
}
