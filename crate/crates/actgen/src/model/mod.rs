//! The audio-visual transformer: modality encoders, caption and
//! action-sequence decoder heads, forward-only proposal generator, and
//! the semantic classifier.

mod checkpoint;
mod classifier;
mod config;
mod decoder;
mod encoder;
#[cfg(test)]
mod model_tests;
mod params;
mod proposal;

pub use checkpoint::{Checkpoint, CheckpointMeta, CHECKPOINT_VERSION};
pub use classifier::classify_semantic;
pub use config::ModelConfig;
pub use decoder::{decode_step, decoder_logits, decoder_logits_from_embeddings, DecoderHead};
pub use encoder::{encode, Encodings};
pub use params::{GraphParams, ModelParams, Param, Submodule};
pub use proposal::{propose_segments, Proposal};

use crate::numerics::NumericsError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("sequence length {len} exceeds maximum {max}")]
    SequenceTooLong { len: usize, max: usize },
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

pub type Result<T> = std::result::Result<T, ModelError>;
