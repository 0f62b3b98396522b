//! Per-batch loss graphs and their gradients.

use super::{LossReport, Result, TrainConfig, TrainError};
use crate::data::{FeatureBundle, SegmentRecord, Vocab, EOS, PAD, SOS};
use crate::model::{
    classify_semantic, decoder_logits, decoder_logits_from_embeddings, encode, DecoderHead,
    Encodings, GraphParams, ModelConfig, ModelParams, Submodule,
};
use crate::numerics::{Grads, Graph, RngState, Tensor};
use std::collections::BTreeMap;

pub type GradMap = BTreeMap<String, Vec<f64>>;

pub(crate) struct MtTerms {
    pub caption: Option<Tensor>,
    pub caption_segments: usize,
    pub action: Option<Tensor>,
    pub action_segments: usize,
}

/// Teacher-forced cross entropy for one record and head. The target is
/// the content tokens plus `<eos>`; the decoder input is the same
/// sequence shifted right behind `<sos>`.
fn teacher_forced_ce(
    g: &mut Graph,
    p: &GraphParams,
    mcfg: &ModelConfig,
    head: DecoderHead,
    enc: &Encodings,
    content: &[usize],
) -> Result<(Tensor, usize)> {
    let mut prefix = Vec::with_capacity(content.len() + 1);
    prefix.push(SOS);
    prefix.extend_from_slice(content);
    let mut target = Vec::with_capacity(content.len() + 1);
    target.extend_from_slice(content);
    target.push(EOS);
    let logits = decoder_logits(g, p, mcfg, head, enc, &prefix)?;
    Ok(g.cross_entropy(logits, &target, Some(PAD))?)
}

/// Combine per-record mean losses into one term normalized by the total
/// contributing-token count, so a caption-heavy batch cannot drown the
/// action term by sheer length.
fn combine_token_normalized(g: &mut Graph, parts: &[(Tensor, usize)]) -> Result<Option<Tensor>> {
    if parts.is_empty() {
        return Ok(None);
    }
    let total: usize = parts.iter().map(|(_, n)| n).sum();
    let mut acc: Option<Tensor> = None;
    for (t, n) in parts {
        let scaled = g.scale(*t, *n as f64 / total as f64);
        acc = Some(match acc {
            None => scaled,
            Some(a) => g.add(a, scaled)?,
        });
    }
    Ok(acc)
}

pub(crate) fn add_multitask_terms(
    g: &mut Graph,
    p: &GraphParams,
    mcfg: &ModelConfig,
    vocab: &Vocab,
    batch: &[(&SegmentRecord, &FeatureBundle)],
    include_caption: bool,
) -> Result<MtTerms> {
    let mut cap_parts: Vec<(Tensor, usize)> = Vec::new();
    let mut act_parts: Vec<(Tensor, usize)> = Vec::new();
    let mut cap_segments = 0;
    let mut act_segments = 0;
    for (rec, feats) in batch {
        if !rec.has_training_annotation() {
            return Err(TrainError::Data(format!(
                "record {}/{} has neither caption nor action annotation",
                rec.video_id, rec.segment_index
            )));
        }
        let enc = encode(g, p, mcfg, feats)?;
        if include_caption {
            if let Some(caption) = &rec.caption {
                let ids = vocab.encode_words(caption);
                let (t, n) = teacher_forced_ce(g, p, mcfg, DecoderHead::Caption, &enc, &ids)?;
                if n > 0 {
                    cap_parts.push((t, n));
                    cap_segments += 1;
                }
            }
        }
        if let Some(actions) = &rec.actions {
            let ids = actions.to_tokens(vocab)?;
            let (t, n) = teacher_forced_ce(g, p, mcfg, DecoderHead::Action, &enc, &ids)?;
            if n > 0 {
                act_parts.push((t, n));
                act_segments += 1;
            }
        }
    }
    Ok(MtTerms {
        caption: combine_token_normalized(g, &cap_parts)?,
        caption_segments: cap_segments,
        action: combine_token_normalized(g, &act_parts)?,
        action_segments: act_segments,
    })
}

/// Autoregressively draw soft action tokens from the action decoder via
/// Gumbel-softmax; returns the sequence of expected embeddings
/// (`L x d_dec`), which keeps the whole sample differentiable.
pub(crate) fn sample_soft_sequence(
    g: &mut Graph,
    p: &GraphParams,
    mcfg: &ModelConfig,
    enc: &Encodings,
    cfg: &TrainConfig,
    rng: &mut RngState,
) -> Result<Tensor> {
    let table = p.get("dec_act.embed");
    let mut prefix_emb = g.embed(table, &[SOS])?;
    let mut samples: Vec<Tensor> = Vec::new();
    for _ in 0..cfg.weak_max_len {
        let logits = decoder_logits_from_embeddings(g, p, mcfg, DecoderHead::Action, enc, prefix_emb)?;
        let len = g.shape(logits)[0];
        let last = g.slice_rows(logits, len - 1, len)?;
        let y = g.gumbel_softmax_sample(last, cfg.tau, rng)?;
        let e = g.matmul(y, table)?;
        samples.push(e);
        let yv = g.values(y);
        let argmax = yv
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(EOS);
        if argmax == EOS {
            break;
        }
        prefix_emb = g.concat_rows(&[prefix_emb, e])?;
    }
    Ok(g.concat_rows(&samples)?)
}

/// Weak-supervision terms for caption-only records: BCE toward 1 on the
/// frozen classifier's judgement of (sampled soft sequence, caption).
/// The caption embedding enters as a constant so no gradient leaks into
/// the caption decoder's table from this path.
pub(crate) fn add_weak_terms(
    g: &mut Graph,
    p: &GraphParams,
    params: &ModelParams,
    vocab: &Vocab,
    batch: &[(&SegmentRecord, &FeatureBundle)],
    cfg: &TrainConfig,
    rng: &mut RngState,
) -> Result<(Option<Tensor>, usize)> {
    let mcfg = &params.config;
    let cap_table = params.get("dec_cap.embed")?;
    let d = mcfg.d_model_dec;
    let mut parts: Vec<Tensor> = Vec::new();
    let mut segments = 0;
    for (rec, feats) in batch {
        let caption = rec.caption.as_ref().ok_or_else(|| {
            TrainError::Data(format!(
                "weak supervision requires a caption on {}/{}",
                rec.video_id, rec.segment_index
            ))
        })?;
        if rec.actions.is_some() {
            return Err(TrainError::Data(format!(
                "weak supervision applies to caption-only records, {}/{} has actions",
                rec.video_id, rec.segment_index
            )));
        }
        let enc = encode(g, p, mcfg, feats)?;
        // constant caption embedding (frozen with respect to this loss)
        let ids = vocab.encode_words(caption);
        let mut emb = Vec::with_capacity(ids.len() * d);
        for id in &ids {
            emb.extend_from_slice(&cap_table.values[id * d..(id + 1) * d]);
        }
        let c_emb = g.leaf(&[ids.len(), d], emb)?;
        for _ in 0..cfg.weak_samples {
            let y_emb = sample_soft_sequence(g, p, mcfg, &enc, cfg, rng)?;
            let prob = classify_semantic(g, p, y_emb, c_emb)?;
            parts.push(g.binary_cross_entropy(prob, 1.0)?);
        }
        segments += 1;
    }
    if parts.is_empty() {
        return Ok((None, 0));
    }
    let inv = 1.0 / parts.len() as f64;
    let mut acc: Option<Tensor> = None;
    for t in &parts {
        let scaled = g.scale(*t, inv);
        acc = Some(match acc {
            None => scaled,
            Some(a) => g.add(a, scaled)?,
        });
    }
    Ok((acc, segments))
}

fn collect_grads(
    p: &GraphParams,
    params: &ModelParams,
    grads: &Grads,
    keep: impl Fn(Submodule) -> bool,
) -> GradMap {
    let mut out = GradMap::new();
    for (name, t) in p.leaves() {
        let owner = params.get(name).expect("leaf exists in bank").owner;
        if !keep(owner) {
            continue;
        }
        if let Some(gr) = grads.get(*t) {
            out.insert(name.clone(), gr.to_vec());
        }
    }
    out
}

fn weighted_total(
    g: &mut Graph,
    terms: &[(Option<Tensor>, f64)],
) -> Result<Tensor> {
    let mut acc = g.scalar_leaf(0.0);
    for (t, w) in terms {
        if let Some(t) = t {
            let scaled = g.scale(*t, *w);
            acc = g.add(acc, scaled)?;
        }
    }
    Ok(acc)
}

/// One multi-task step: teacher-forced CE through the caption decoder
/// for records with captions and through the action decoder for records
/// with action sequences; a missing annotation contributes neither loss
/// nor gradient. `include_caption` is false in the baseline phase.
pub fn multitask_step(
    batch: &[(&SegmentRecord, &FeatureBundle)],
    params: &ModelParams,
    vocab: &Vocab,
    cfg: &TrainConfig,
    include_caption: bool,
) -> Result<(GradMap, LossReport)> {
    cfg.validate()?;
    let mcfg = &params.config;
    let mut g = Graph::new();
    let p = params.insert_into(&mut g);
    let terms = add_multitask_terms(&mut g, &p, mcfg, vocab, batch, include_caption)?;
    let total = weighted_total(
        &mut g,
        &[
            (terms.caption, cfg.caption_weight),
            (terms.action, cfg.action_weight),
        ],
    )?;
    let grads = g.backward(total);
    let gm = collect_grads(&p, params, &grads, |o| {
        matches!(
            o,
            Submodule::AvEncoder
                | Submodule::TextEncoder
                | Submodule::CaptionDecoder
                | Submodule::ActionDecoder
        )
    });
    let report = LossReport {
        caption_loss: terms.caption.map(|t| g.scalar(t)),
        caption_segments: terms.caption_segments,
        action_loss: terms.action.map(|t| g.scalar(t)),
        action_segments: terms.action_segments,
        total: g.scalar(total),
        ..LossReport::default()
    };
    debug_assert!(report.consistent());
    Ok((gm, report))
}

/// One weakly-supervised step over caption-only records. The classifier
/// must already be pre-trained; its parameters receive exactly zero
/// gradient from this step, as does the caption decoder.
pub fn weak_sup_step(
    batch: &[(&SegmentRecord, &FeatureBundle)],
    params: &ModelParams,
    vocab: &Vocab,
    cfg: &TrainConfig,
    rng: &mut RngState,
    classifier_pretrained: bool,
) -> Result<(GradMap, LossReport)> {
    cfg.validate()?;
    if !classifier_pretrained {
        return Err(TrainError::Config(
            "weak supervision requires a pre-trained semantic classifier".into(),
        ));
    }
    let mut g = Graph::new();
    let p = params.insert_into(&mut g);
    let (weak, segments) = add_weak_terms(&mut g, &p, params, vocab, batch, cfg, rng)?;
    let total = weighted_total(&mut g, &[(weak, cfg.weak_weight)])?;
    let grads = g.backward(total);
    let gm = collect_grads(&p, params, &grads, |o| {
        matches!(
            o,
            Submodule::AvEncoder | Submodule::TextEncoder | Submodule::ActionDecoder
        )
    });
    let report = LossReport {
        weak_loss: weak.map(|t| g.scalar(t)),
        weak_segments: segments,
        total: g.scalar(total),
        ..LossReport::default()
    };
    debug_assert!(report.consistent());
    Ok((gm, report))
}

/// One fine-tuning step: the multi-task terms always apply; the weak
/// term joins when the batch is entirely caption-only. Both live in a
/// single graph, so the reported total is exactly the sum of its parts.
pub fn finetune_weak_step(
    batch: &[(&SegmentRecord, &FeatureBundle)],
    params: &ModelParams,
    vocab: &Vocab,
    cfg: &TrainConfig,
    rng: &mut RngState,
    classifier_pretrained: bool,
) -> Result<(GradMap, LossReport)> {
    cfg.validate()?;
    if !classifier_pretrained {
        return Err(TrainError::Config(
            "weak supervision requires a pre-trained semantic classifier".into(),
        ));
    }
    let mcfg = &params.config;
    let mut g = Graph::new();
    let p = params.insert_into(&mut g);
    let terms = add_multitask_terms(&mut g, &p, mcfg, vocab, batch, true)?;
    let caption_only = batch.iter().all(|(r, _)| r.actions.is_none());
    let (weak, weak_segments) = if caption_only {
        add_weak_terms(&mut g, &p, params, vocab, batch, cfg, rng)?
    } else {
        (None, 0)
    };
    let total = weighted_total(
        &mut g,
        &[
            (terms.caption, cfg.caption_weight),
            (terms.action, cfg.action_weight),
            (weak, cfg.weak_weight),
        ],
    )?;
    let grads = g.backward(total);
    let gm = collect_grads(&p, params, &grads, |o| {
        matches!(
            o,
            Submodule::AvEncoder
                | Submodule::TextEncoder
                | Submodule::CaptionDecoder
                | Submodule::ActionDecoder
        )
    });
    let report = LossReport {
        caption_loss: terms.caption.map(|t| g.scalar(t)),
        caption_segments: terms.caption_segments,
        action_loss: terms.action.map(|t| g.scalar(t)),
        action_segments: terms.action_segments,
        weak_loss: weak.map(|t| g.scalar(t)),
        weak_segments,
        total: g.scalar(total),
        ..LossReport::default()
    };
    debug_assert!(report.consistent());
    Ok((gm, report))
}
