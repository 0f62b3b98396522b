//! Dataset layer: a synthetic kitchen-world generator standing in for
//! extracted video features, plus manifest/feature-file ingestion and
//! video-level cross-validation splits.

mod generate;
mod manifest;
mod split;
mod vocab;
mod world;

pub use generate::{generate_dataset, GenConfig};
pub use manifest::{load_manifest, write_dataset};
pub use split::{materialize_fold, split_dataset};
pub use vocab::{ActionSequence, ActionStep, Vocab, EOS, PAD, SOS, SPECIALS, UNK};
pub use world::{default_world, VerbSpec, WorldSpec};

use crate::numerics::Matrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("manifest parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("missing feature file: {path}")]
    MissingFile { path: String },
    #[error("record {video_id}/{segment_index} has neither caption nor action annotation")]
    MissingAnnotation {
        video_id: String,
        segment_index: usize,
    },
    #[error("unknown class `{0}` (not in vocabulary)")]
    UnknownClass(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DataError>;

pub const SCHEMA_VERSION: u32 = 1;

/// One annotated video segment. Feature payloads live beside the record
/// in [`Dataset::features`]; `feature_ref` names the on-disk file once
/// the dataset has been written.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub video_id: String,
    pub segment_index: usize,
    pub onset: f64,
    pub offset: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actions: Option<ActionSequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subtitle: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_ref: Option<String>,
}

impl SegmentRecord {
    pub fn has_training_annotation(&self) -> bool {
        self.caption.is_some() || self.actions.is_some()
    }
}

/// Per-segment feature sequences. A missing subtitle leaves `x_t` empty;
/// the model substitutes its learned `<unk>` text-feature row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureBundle {
    pub x_a: Matrix,
    pub x_v: Matrix,
    pub x_t: Option<Matrix>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub schema_version: u32,
    pub d_audio: usize,
    pub d_visual: usize,
    pub d_text: usize,
    pub vocab: Vocab,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub records: Vec<SegmentRecord>,
    pub features: Vec<FeatureBundle>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn video_ids(&self) -> Vec<String> {
        let mut ids = Vec::new();
        for r in &self.records {
            if ids.last() != Some(&r.video_id) && !ids.contains(&r.video_id) {
                ids.push(r.video_id.clone());
            }
        }
        ids
    }

    /// Validates structural invariants shared by generated and ingested data.
    pub fn validate(&self) -> Result<()> {
        if self.records.len() != self.features.len() {
            return Err(DataError::Schema(format!(
                "{} records but {} feature bundles",
                self.records.len(),
                self.features.len()
            )));
        }
        for (r, f) in self.records.iter().zip(&self.features) {
            if r.onset >= r.offset {
                return Err(DataError::Schema(format!(
                    "{}/{}: onset {} not before offset {}",
                    r.video_id, r.segment_index, r.onset, r.offset
                )));
            }
            for (m, d, name) in [
                (Some(&f.x_a), self.header.d_audio, "audio"),
                (Some(&f.x_v), self.header.d_visual, "visual"),
                (f.x_t.as_ref().map(|m| m), self.header.d_text, "text"),
            ] {
                if let Some(m) = m {
                    if m.cols != d {
                        return Err(DataError::Schema(format!(
                            "{}/{}: {name} feature dim {} does not match header {d}",
                            r.video_id, r.segment_index, m.cols
                        )));
                    }
                    if m.rows == 0 {
                        return Err(DataError::Schema(format!(
                            "{}/{}: empty {name} feature sequence",
                            r.video_id, r.segment_index
                        )));
                    }
                    if !m.is_finite() {
                        return Err(DataError::Schema(format!(
                            "{}/{}: non-finite {name} features",
                            r.video_id, r.segment_index
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}
