//! Token vocabularies. Both the word vocabulary (captions, subtitles)
//! and the action vocabulary (verb classes then noun classes) share the
//! same four leading specials.

use super::{DataError, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const PAD: usize = 0;
pub const SOS: usize = 1;
pub const EOS: usize = 2;
pub const UNK: usize = 3;
pub const SPECIALS: usize = 4;

const SPECIAL_NAMES: [&str; 4] = ["<pad>", "<sos>", "<eos>", "<unk>"];

/// One action step: a single verb class plus zero or more noun classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionStep {
    pub verb: String,
    pub nouns: Vec<String>,
}

impl ActionStep {
    pub fn new(verb: &str, nouns: &[&str]) -> Self {
        ActionStep {
            verb: verb.to_string(),
            nouns: nouns.iter().map(|n| n.to_string()).collect(),
        }
    }

    /// Step equality for metrics: same verb and same noun *set*.
    pub fn matches(&self, other: &ActionStep) -> bool {
        if self.verb != other.verb || self.nouns.len() != other.nouns.len() {
            return false;
        }
        let mut a = self.nouns.clone();
        let mut b = other.nouns.clone();
        a.sort();
        b.sort();
        a == b
    }
}

impl std::fmt::Display for ActionStep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.verb)?;
        for n in &self.nouns {
            write!(f, " {n}")?;
        }
        Ok(())
    }
}

/// Ordered sequence of action steps; serialized verb-first per step.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSequence(pub Vec<ActionStep>);

impl ActionSequence {
    pub fn steps(&self) -> &[ActionStep] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Flat token serialization: each step emits its verb token then its
    /// noun tokens, steps in order. No terminator is appended.
    pub fn to_tokens(&self, vocab: &Vocab) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for step in &self.0 {
            out.push(vocab.verb_token(&step.verb)?);
            for n in &step.nouns {
                out.push(vocab.noun_token(n)?);
            }
        }
        Ok(out)
    }

    pub fn token_strings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for step in &self.0 {
            out.push(step.verb.clone());
            out.extend(step.nouns.iter().cloned());
        }
        out
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vocab {
    pub words: Vec<String>,
    pub verbs: Vec<String>,
    pub nouns: Vec<String>,
}

impl Vocab {
    pub fn word_vocab_size(&self) -> usize {
        SPECIALS + self.words.len()
    }

    pub fn action_vocab_size(&self) -> usize {
        SPECIALS + self.verbs.len() + self.nouns.len()
    }

    pub fn word_id(&self, w: &str) -> usize {
        self.word_index()
            .get(w)
            .map(|i| SPECIALS + i)
            .unwrap_or(UNK)
    }

    fn word_index(&self) -> BTreeMap<&str, usize> {
        self.words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.as_str(), i))
            .collect()
    }

    pub fn word_of(&self, id: usize) -> &str {
        if id < SPECIALS {
            SPECIAL_NAMES[id]
        } else {
            self.words
                .get(id - SPECIALS)
                .map(|s| s.as_str())
                .unwrap_or("<unk>")
        }
    }

    pub fn encode_words(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.word_id(t)).collect()
    }

    pub fn verb_token(&self, verb: &str) -> Result<usize> {
        self.verbs
            .iter()
            .position(|v| v == verb)
            .map(|i| SPECIALS + i)
            .ok_or_else(|| DataError::UnknownClass(verb.to_string()))
    }

    pub fn noun_token(&self, noun: &str) -> Result<usize> {
        self.nouns
            .iter()
            .position(|n| n == noun)
            .map(|i| SPECIALS + self.verbs.len() + i)
            .ok_or_else(|| DataError::UnknownClass(noun.to_string()))
    }

    /// All noun token ids, in vocabulary order.
    pub fn noun_token_range(&self) -> std::ops::Range<usize> {
        let lo = SPECIALS + self.verbs.len();
        lo..lo + self.nouns.len()
    }

    pub fn verb_token_range(&self) -> std::ops::Range<usize> {
        SPECIALS..SPECIALS + self.verbs.len()
    }

    pub fn is_verb_token(&self, id: usize) -> bool {
        self.verb_token_range().contains(&id)
    }

    pub fn is_noun_token(&self, id: usize) -> bool {
        self.noun_token_range().contains(&id)
    }

    /// Name of an action-vocabulary token.
    pub fn action_token_name(&self, id: usize) -> &str {
        if id < SPECIALS {
            SPECIAL_NAMES[id]
        } else if self.is_verb_token(id) {
            &self.verbs[id - SPECIALS]
        } else if self.is_noun_token(id) {
            &self.nouns[id - SPECIALS - self.verbs.len()]
        } else {
            "<unk>"
        }
    }
}
