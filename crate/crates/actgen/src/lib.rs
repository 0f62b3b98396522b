//! Action-sequence generation from instruction-video features.
//!
//! The pipeline: a synthetic kitchen-world data generator (or manifest
//! ingestion), a multi-modal transformer with caption and action-sequence
//! decoder heads, style-transfer training (multi-task plus
//! weakly-supervised fine-tuning through a semantic classifier),
//! vocabulary-constrained decoding, sequence metrics, and a simulated
//! kitchen executor driven by dynamic movement primitives.

pub mod numerics;
pub mod cli;
pub mod data;
pub mod decode;
pub mod dmp;
pub mod metrics;
pub mod model;
pub mod training;
