//! Sequence-quality and task-level metrics.

mod bleu;
mod meteor;
mod rates;
mod report;

pub use bleu::{bleu, bleu_stats, corpus_bleu, BleuStats};
pub use meteor::meteor;
pub use rates::{action_alignment, error_rates, levenshtein, task_success};
pub use report::{build_report, format_quality_table, format_task_table, EvalEntry, EvalReport, SegmentEval};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("empty reference sequence")]
    EmptyReference,
    #[error("unsupported n-gram order {0} (only 1 and 2)")]
    UnsupportedOrder(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("report error: {0}")]
    Report(String),
}

pub type Result<T> = std::result::Result<T, MetricsError>;
