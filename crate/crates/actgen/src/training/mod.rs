//! Style-transfer training: the multi-task caption/action loss over
//! heterogeneously annotated batches, classifier pre-training with
//! negative sampling, and weakly-supervised fine-tuning that pushes
//! sampled action sequences toward the caption's semantics through a
//! frozen classifier.

mod losses;
mod pretrain;
mod trainer;


pub use losses::{finetune_weak_step, multitask_step, weak_sup_step, GradMap};
pub use pretrain::{classifier_scores, pretrain_classifier, PretrainReport};
pub use trainer::{train, Phase, TrainOutcome};

use crate::data::DataError;
use crate::decode::DecodeError;
use crate::metrics::MetricsError;
use crate::model::ModelError;
use crate::numerics::NumericsError;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error(transparent)]
    Dataset(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, TrainError>;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub steps: u64,
    /// Gumbel-softmax temperature for weakly-supervised sampling.
    pub tau: f64,
    /// Soft samples drawn per caption-only segment.
    pub weak_samples: usize,
    /// Maximum sampled action-sequence length.
    pub weak_max_len: usize,
    pub caption_weight: f64,
    pub action_weight: f64,
    pub weak_weight: f64,
    pub seed: u64,
    /// Validation cadence (steps) for best-epoch selection; 0 disables.
    pub eval_every: u64,
    /// Periodic checkpoint cadence (steps); 0 keeps only the final one.
    pub checkpoint_every: u64,
    pub classifier_steps: u64,
    pub classifier_batch: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            batch_size: 8,
            steps: 300,
            tau: 1.0,
            weak_samples: 1,
            weak_max_len: 10,
            caption_weight: 1.0,
            action_weight: 1.0,
            weak_weight: 1.0,
            seed: 0,
            eval_every: 50,
            checkpoint_every: 0,
            classifier_steps: 400,
            classifier_batch: 16,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau <= 0.0 {
            return Err(TrainError::Config(format!(
                "gumbel temperature must be positive, got {}",
                self.tau
            )));
        }
        if self.steps == 0 {
            return Err(TrainError::Config("steps must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(TrainError::Config("batch size must be positive".into()));
        }
        for (name, w) in [
            ("caption_weight", self.caption_weight),
            ("action_weight", self.action_weight),
            ("weak_weight", self.weak_weight),
        ] {
            if w < 0.0 {
                return Err(TrainError::Config(format!("{name} must be >= 0, got {w}")));
            }
        }
        if self.weak_samples == 0 || self.weak_max_len == 0 {
            return Err(TrainError::Config(
                "weak_samples and weak_max_len must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Per-step loss record; a term's count is zero exactly when the term is
/// absent. Serialized as one JSON line per step in the training log.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct LossReport {
    pub step: u64,
    pub caption_loss: Option<f64>,
    pub caption_segments: usize,
    pub action_loss: Option<f64>,
    pub action_segments: usize,
    pub weak_loss: Option<f64>,
    pub weak_segments: usize,
    pub class_loss: Option<f64>,
    pub class_pairs: usize,
    pub total: f64,
}

impl LossReport {
    /// Count/value consistency invariant.
    pub fn consistent(&self) -> bool {
        (self.caption_loss.is_none() == (self.caption_segments == 0))
            && (self.action_loss.is_none() == (self.action_segments == 0))
            && (self.weak_loss.is_none() == (self.weak_segments == 0))
            && (self.class_loss.is_none() == (self.class_pairs == 0))
    }
}
