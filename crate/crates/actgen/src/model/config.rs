//! Model architecture configuration.

use super::{ModelError, Result};
use crate::data::Vocab;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    // input feature dims
    pub d_audio: usize,
    pub d_visual: usize,
    pub d_text: usize,
    // layer widths
    pub d_model_av: usize,
    pub d_model_text: usize,
    pub d_model_dec: usize,
    /// Feed-forward width is `ff_mult * d_model` of the owning stack.
    pub ff_mult: usize,
    pub enc_layers: usize,
    pub dec_layers: usize,
    pub heads: usize,
    // vocabulary sizes (including the four specials)
    pub word_vocab: usize,
    pub action_vocab: usize,
    pub max_len: usize,
    pub classifier_hidden: usize,
    pub proposal_hidden: usize,
    pub proposal_kernels: Vec<usize>,
}

impl ModelConfig {
    /// Desk-scale defaults sized so a full training run stays under
    /// minutes on one core.
    pub fn desk(vocab: &Vocab) -> Self {
        ModelConfig {
            d_audio: 32,
            d_visual: 48,
            d_text: 16,
            d_model_av: 32,
            d_model_text: 16,
            d_model_dec: 32,
            ff_mult: 4,
            enc_layers: 1,
            dec_layers: 1,
            heads: 4,
            word_vocab: vocab.word_vocab_size(),
            action_vocab: vocab.action_vocab_size(),
            max_len: 48,
            classifier_hidden: 64,
            proposal_hidden: 16,
            proposal_kernels: vec![3, 5, 9],
        }
    }

    /// Full-scale widths: 768/1024 av features, 300-d text, two-layer
    /// blocks, four heads, 300-wide decoders and classifier hidden.
    pub fn paper_scale(word_vocab: usize, action_vocab: usize) -> Self {
        ModelConfig {
            d_audio: 768,
            d_visual: 1024,
            d_text: 300,
            d_model_av: 768,
            d_model_text: 300,
            d_model_dec: 300,
            ff_mult: 4,
            enc_layers: 2,
            dec_layers: 2,
            heads: 4,
            word_vocab,
            action_vocab,
            max_len: 64,
            classifier_hidden: 300,
            proposal_hidden: 64,
            proposal_kernels: vec![3, 5, 9, 17],
        }
    }

    pub fn ff_av(&self) -> usize {
        self.ff_mult * self.d_model_av
    }

    pub fn ff_text(&self) -> usize {
        self.ff_mult * self.d_model_text
    }

    pub fn ff_dec(&self) -> usize {
        self.ff_mult * self.d_model_dec
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d_audio", self.d_audio),
            ("d_visual", self.d_visual),
            ("d_text", self.d_text),
            ("d_model_av", self.d_model_av),
            ("d_model_text", self.d_model_text),
            ("d_model_dec", self.d_model_dec),
            ("ff_mult", self.ff_mult),
            ("enc_layers", self.enc_layers),
            ("dec_layers", self.dec_layers),
            ("heads", self.heads),
            ("max_len", self.max_len),
            ("classifier_hidden", self.classifier_hidden),
            ("proposal_hidden", self.proposal_hidden),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(ModelError::Config(format!("{name} must be positive")));
            }
        }
        for (name, d) in [
            ("d_model_av", self.d_model_av),
            ("d_model_text", self.d_model_text),
            ("d_model_dec", self.d_model_dec),
        ] {
            if d % self.heads != 0 {
                return Err(ModelError::Config(format!(
                    "{name}={d} is not divisible by heads={}",
                    self.heads
                )));
            }
            if d % 2 != 0 {
                return Err(ModelError::Config(format!(
                    "{name}={d} must be even for sinusoidal positions"
                )));
            }
        }
        if self.word_vocab < 5 || self.action_vocab < 5 {
            return Err(ModelError::Config(
                "vocabularies must contain at least one non-special token".into(),
            ));
        }
        if self.proposal_kernels.is_empty() {
            return Err(ModelError::Config("proposal_kernels must be non-empty".into()));
        }
        Ok(())
    }
}
