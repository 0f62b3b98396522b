//! Corpus evaluation report: per-segment detail rows plus corpus-level
//! scores recomputable from those rows.

use super::bleu::{bleu_stats, BleuStats};
use super::{action_alignment, levenshtein, meteor, MetricsError, Result};
use crate::data::ActionSequence;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SegmentEval {
    pub video_id: String,
    pub segment_index: usize,
    pub hyp_tokens: Vec<String>,
    pub ref_tokens: Vec<String>,
    pub bleu: BleuStats,
    pub meteor: f64,
    pub lev_distance: usize,
    pub ref_steps: usize,
    pub matched_steps: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalReport {
    pub bleu1: f64,
    pub bleu2: f64,
    pub meteor: f64,
    pub word_error: f64,
    pub action_error: f64,
    pub task_success: f64,
    pub segments: usize,
    pub clips: usize,
    pub rows: Vec<SegmentEval>,
}

/// One evaluation entry: a predicted sequence against its reference.
pub struct EvalEntry<'a> {
    pub video_id: &'a str,
    pub segment_index: usize,
    pub hyp: &'a ActionSequence,
    pub reference: &'a ActionSequence,
}

pub fn build_report(entries: &[EvalEntry]) -> Result<EvalReport> {
    if entries.is_empty() {
        return Err(MetricsError::Report("no segments to evaluate".into()));
    }
    let mut rows = Vec::with_capacity(entries.len());
    let mut agg1 = BleuStats {
        matched: vec![0; 2],
        total: vec![0; 2],
        hyp_len: 0,
        ref_len: 0,
    };
    let mut meteor_sum = 0.0;
    let mut lev_total = 0usize;
    let mut ref_tokens_total = 0usize;
    let mut matched_steps_total = 0usize;
    let mut ref_steps_total = 0usize;
    for e in entries {
        let hyp_tokens = e.hyp.token_strings();
        let ref_tokens = e.reference.token_strings();
        if ref_tokens.is_empty() {
            return Err(MetricsError::EmptyReference);
        }
        let stats = bleu_stats(&hyp_tokens, &ref_tokens, 2)?;
        agg1.accumulate(&stats);
        let m = meteor(&hyp_tokens, &ref_tokens)?;
        meteor_sum += m;
        let lev = levenshtein(&hyp_tokens, &ref_tokens);
        lev_total += lev;
        ref_tokens_total += ref_tokens.len();
        let matched = action_alignment(e.hyp, e.reference);
        matched_steps_total += matched;
        ref_steps_total += e.reference.steps().len();
        rows.push(SegmentEval {
            video_id: e.video_id.to_string(),
            segment_index: e.segment_index,
            hyp_tokens,
            ref_tokens,
            bleu: stats,
            meteor: m,
            lev_distance: lev,
            ref_steps: e.reference.steps().len(),
            matched_steps: matched,
        });
    }
    // clip success: every segment of the clip fully matched
    let mut by_clip: BTreeMap<&str, bool> = BTreeMap::new();
    for r in &rows {
        let ok = r.matched_steps == r.ref_steps;
        by_clip
            .entry(r.video_id.as_str())
            .and_modify(|v| *v &= ok)
            .or_insert(ok);
    }
    let clips = by_clip.len();
    let successes = by_clip.values().filter(|v| **v).count();

    Ok(EvalReport {
        bleu1: agg1.score(1),
        bleu2: agg1.score(2),
        meteor: meteor_sum / rows.len() as f64,
        word_error: 100.0 * lev_total as f64 / ref_tokens_total as f64,
        action_error: 100.0 * (1.0 - matched_steps_total as f64 / ref_steps_total as f64),
        task_success: 100.0 * successes as f64 / clips as f64,
        segments: rows.len(),
        clips,
        rows,
    })
}

/// Sequence-quality comparison table, one labelled system per row.
pub fn format_quality_table(rows: &[(&str, &EvalReport)]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<14} {:>8} {:>8} {:>8}\n",
        "", "BLEU-1", "BLEU-2", "METEOR"
    ));
    for (label, r) in rows {
        out.push_str(&format!(
            "{:<14} {:>8.3} {:>8.3} {:>8.3}\n",
            label, r.bleu1, r.bleu2, r.meteor
        ));
    }
    out
}

/// Task-level comparison table.
pub fn format_task_table(rows: &[(&str, &EvalReport)]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<14} {:>12} {:>14} {:>14}\n",
        "", "Word err [%]", "Action err [%]", "Success [%]"
    ));
    for (label, r) in rows {
        out.push_str(&format!(
            "{:<14} {:>12.1} {:>14.1} {:>14.1}\n",
            label, r.word_error, r.action_error, r.task_success
        ));
    }
    out
}
