//! Greedy and beam decoding over a fixed encoding.

use super::{apply_task_mask, DecodeConfig, Result, Strategy};
use crate::data::{Vocab, EOS, PAD, SOS, UNK};
use crate::model::{decode_step, DecoderHead, Encodings, GraphParams, ModelConfig};
use crate::numerics::{log_softmax_slice, Graph};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decoded {
    /// Content tokens: no `<sos>`, no terminator.
    pub tokens: Vec<usize>,
    /// Log-probability of the full hypothesis including its terminator.
    pub score: f64,
    /// True when max length cut generation before `<eos>`.
    pub truncated: bool,
}

#[derive(Clone)]
struct Hyp {
    tokens: Vec<usize>,
    logp: f64,
    done: bool,
}

fn ranked(score: f64, len: usize, penalty: f64) -> f64 {
    if penalty > 0.0 {
        score / (len.max(1) as f64).powf(penalty)
    } else {
        score
    }
}

/// Masked next-token log-probabilities for one prefix.
fn step_logprobs(
    g: &mut Graph,
    p: &GraphParams,
    mcfg: &ModelConfig,
    head: DecoderHead,
    enc: &Encodings,
    prefix: &[usize],
    dcfg: &DecodeConfig,
    vocab: &Vocab,
) -> Result<Vec<f64>> {
    let logits_t = decode_step(g, p, mcfg, head, enc, prefix)?;
    let mut logits = g.values(logits_t).to_vec();
    // never generate bookkeeping tokens
    logits[PAD] = f64::NEG_INFINITY;
    logits[SOS] = f64::NEG_INFINITY;
    logits[UNK] = f64::NEG_INFINITY;
    if head == DecoderHead::Action {
        if let Some(mask) = &dcfg.mask {
            apply_task_mask(&mut logits, mask, vocab)?;
        }
    }
    Ok(log_softmax_slice(&logits))
}

fn greedy(
    g: &mut Graph,
    p: &GraphParams,
    mcfg: &ModelConfig,
    head: DecoderHead,
    enc: &Encodings,
    dcfg: &DecodeConfig,
    vocab: &Vocab,
) -> Result<Decoded> {
    let mut tokens: Vec<usize> = Vec::new();
    let mut score = 0.0;
    loop {
        let mut prefix = vec![SOS];
        prefix.extend_from_slice(&tokens);
        let lp = step_logprobs(g, p, mcfg, head, enc, &prefix, dcfg, vocab)?;
        let (best, best_lp) = argmax(&lp);
        score += best_lp;
        if best == EOS {
            return Ok(Decoded {
                tokens,
                score,
                truncated: false,
            });
        }
        tokens.push(best);
        if tokens.len() >= dcfg.max_len {
            return Ok(Decoded {
                tokens,
                score,
                truncated: true,
            });
        }
    }
}

fn argmax(lp: &[f64]) -> (usize, f64) {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in lp.iter().enumerate() {
        if *v > best_v {
            best_v = *v;
            best = i;
        }
    }
    (best, best_v)
}

fn beam(
    g: &mut Graph,
    p: &GraphParams,
    mcfg: &ModelConfig,
    head: DecoderHead,
    enc: &Encodings,
    dcfg: &DecodeConfig,
    vocab: &Vocab,
) -> Result<Decoded> {
    let width = dcfg.beam_width;
    let mut live = vec![Hyp {
        tokens: Vec::new(),
        logp: 0.0,
        done: false,
    }];
    let mut completed: Vec<Hyp> = Vec::new();

    for _ in 0..dcfg.max_len {
        let mut candidates: Vec<Hyp> = Vec::new();
        for h in &live {
            let mut prefix = vec![SOS];
            prefix.extend_from_slice(&h.tokens);
            let lp = step_logprobs(g, p, mcfg, head, enc, &prefix, dcfg, vocab)?;
            for (tok, tok_lp) in lp.iter().enumerate() {
                if tok_lp.is_infinite() {
                    continue;
                }
                let mut tokens = h.tokens.clone();
                let done = tok == EOS;
                if !done {
                    tokens.push(tok);
                }
                candidates.push(Hyp {
                    tokens,
                    logp: h.logp + tok_lp,
                    done,
                });
            }
        }
        // deterministic: score desc, then shorter, then lexicographic tokens
        candidates.sort_by(|a, b| {
            b.logp
                .partial_cmp(&a.logp)
                .unwrap()
                .then(a.tokens.len().cmp(&b.tokens.len()))
                .then(a.tokens.cmp(&b.tokens))
        });
        candidates.truncate(width);
        live = Vec::new();
        for c in candidates {
            if c.done {
                completed.push(c);
            } else {
                live.push(c);
            }
        }
        if live.is_empty() {
            break;
        }
    }

    let pick_completed = completed.into_iter().max_by(|a, b| {
        ranked(a.logp, a.tokens.len() + 1, dcfg.length_penalty)
            .partial_cmp(&ranked(b.logp, b.tokens.len() + 1, dcfg.length_penalty))
            .unwrap()
            .then(b.tokens.cmp(&a.tokens))
    });
    match pick_completed {
        Some(h) => Ok(Decoded {
            tokens: h.tokens,
            score: h.logp,
            truncated: false,
        }),
        None => {
            // nothing terminated within max_len: best live hypothesis
            let h = live
                .into_iter()
                .max_by(|a, b| a.logp.partial_cmp(&b.logp).unwrap())
                .expect("beam always holds at least one hypothesis");
            Ok(Decoded {
                tokens: h.tokens,
                score: h.logp,
                truncated: true,
            })
        }
    }
}

/// Decode one sequence from `<sos>` to `<eos>` (or max length). Beam
/// search keeps the greedy rollout as a floor candidate, so its reported
/// score is never below the greedy score.
pub fn decode_sequence(
    g: &mut Graph,
    p: &GraphParams,
    mcfg: &ModelConfig,
    head: DecoderHead,
    enc: &Encodings,
    dcfg: &DecodeConfig,
    vocab: &Vocab,
) -> Result<Decoded> {
    dcfg.validate()?;
    let g_result = greedy(g, p, mcfg, head, enc, dcfg, vocab)?;
    match dcfg.strategy {
        Strategy::Greedy => Ok(g_result),
        Strategy::Beam if dcfg.beam_width == 1 => Ok(g_result),
        Strategy::Beam => {
            let b = beam(g, p, mcfg, head, enc, dcfg, vocab)?;
            if b.score >= g_result.score {
                Ok(b)
            } else {
                Ok(g_result)
            }
        }
    }
}
