//! Self-describing checkpoint container: config, vocabulary, named
//! parameter tensors, RNG stream, and run metadata.

use super::{ModelError, ModelParams, Result};
use crate::data::Vocab;
use crate::numerics::RngState;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub phase: String,
    pub step: u64,
    /// Step whose validation METEOR selected these weights, if any.
    pub selected_step: Option<u64>,
    pub best_val_meteor: Option<f64>,
    pub classifier_pretrained: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub vocab: Vocab,
    pub params: ModelParams,
    pub rng: RngState,
    pub meta: CheckpointMeta,
}

impl Checkpoint {
    pub fn new(vocab: Vocab, params: ModelParams, rng: RngState, meta: CheckpointMeta) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            vocab,
            params,
            rng,
            meta,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        }
        let mut w = BufWriter::new(
            fs::File::create(path).map_err(|e| ModelError::Checkpoint(e.to_string()))?,
        );
        serde_json::to_writer(&mut w, self).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        w.flush().map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let r = BufReader::new(
            fs::File::open(path)
                .map_err(|e| ModelError::Checkpoint(format!("{}: {e}", path.display())))?,
        );
        let ckpt: Checkpoint =
            serde_json::from_reader(r).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(ModelError::Checkpoint(format!(
                "unsupported checkpoint version {}",
                ckpt.version
            )));
        }
        ckpt.params.config.validate()?;
        if !ckpt.params.all_finite() {
            return Err(ModelError::Checkpoint("non-finite parameters".into()));
        }
        Ok(ckpt)
    }
}
