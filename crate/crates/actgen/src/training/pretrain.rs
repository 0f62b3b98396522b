//! Semantic-classifier pre-training on paired (action sequence, caption)
//! records with randomly drawn negative captions. Only classifier
//! parameters move; the embedding tables it reads stay fixed.

use super::{LossReport, Result, TrainConfig, TrainError};
use crate::data::{Dataset, Vocab};
use crate::model::{classify_semantic, GraphParams, ModelParams, Submodule};
use crate::numerics::{Adam, AdamConfig, Graph, RngState, Tensor};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PretrainReport {
    pub pairs: usize,
    pub steps: u64,
    pub first_loss: f64,
    pub final_loss: f64,
}

struct Pair {
    action_ids: Vec<usize>,
    caption_ids: Vec<usize>,
    caption_tokens: Vec<String>,
}

fn collect_pairs(ds: &Dataset, vocab: &Vocab) -> Result<Vec<Pair>> {
    let mut pairs = Vec::new();
    for r in &ds.records {
        if let (Some(actions), Some(caption)) = (&r.actions, &r.caption) {
            let action_ids = actions.to_tokens(vocab)?;
            if action_ids.is_empty() || caption.is_empty() {
                continue;
            }
            pairs.push(Pair {
                action_ids,
                caption_ids: vocab.encode_words(caption),
                caption_tokens: caption.clone(),
            });
        }
    }
    Ok(pairs)
}

/// Uniform negative draw that never returns the positive's caption.
fn sample_negative(pairs: &[Pair], pos: usize, rng: &mut RngState) -> usize {
    loop {
        let j = rng.below(pairs.len());
        if pairs[j].caption_tokens != pairs[pos].caption_tokens {
            return j;
        }
    }
}

fn embed_const(g: &mut Graph, params: &ModelParams, table: &str, ids: &[usize]) -> Result<Tensor> {
    let t = params.get(table)?;
    let d = t.shape[1];
    let mut vals = Vec::with_capacity(ids.len() * d);
    for id in ids {
        vals.extend_from_slice(&t.values[id * d..(id + 1) * d]);
    }
    Ok(g.leaf(&[ids.len(), d], vals)?)
}

fn pair_loss(
    g: &mut Graph,
    p: &GraphParams,
    params: &ModelParams,
    pair: &Pair,
    neg: &Pair,
) -> Result<Tensor> {
    let y = embed_const(g, params, "dec_act.embed", &pair.action_ids)?;
    let c_pos = embed_const(g, params, "dec_cap.embed", &pair.caption_ids)?;
    let c_neg = embed_const(g, params, "dec_cap.embed", &neg.caption_ids)?;
    let p_pos = classify_semantic(g, p, y, c_pos)?;
    let p_neg = classify_semantic(g, p, y, c_neg)?;
    let l_pos = g.binary_cross_entropy(p_pos, 1.0)?;
    let l_neg = g.binary_cross_entropy(p_neg, 0.0)?;
    Ok(g.add(l_pos, l_neg)?)
}

/// Minimize BCE(S(y, c+), 1) + BCE(S(y, c-), 0) over classifier
/// parameters. Requires at least two distinct captions so negatives
/// exist. Returns the per-step log alongside a summary.
pub fn pretrain_classifier(
    ds: &Dataset,
    params: &mut ModelParams,
    cfg: &TrainConfig,
    rng: &mut RngState,
) -> Result<(PretrainReport, Vec<LossReport>)> {
    cfg.validate()?;
    let vocab = &ds.header.vocab;
    let pairs = collect_pairs(ds, vocab)?;
    if pairs.is_empty() {
        return Err(TrainError::Config(
            "classifier pre-training needs records with both actions and captions".into(),
        ));
    }
    let distinct: std::collections::BTreeSet<&Vec<String>> =
        pairs.iter().map(|p| &p.caption_tokens).collect();
    if distinct.len() < 2 {
        return Err(TrainError::Config(
            "classifier pre-training needs at least two distinct captions for negatives".into(),
        ));
    }

    let mut adam = Adam::new(AdamConfig {
        lr: cfg.lr,
        ..AdamConfig::default()
    });
    let mut log = Vec::with_capacity(cfg.classifier_steps as usize);
    let mut first_loss = 0.0;
    let mut final_loss = 0.0;
    for step in 0..cfg.classifier_steps {
        let mut g = Graph::new();
        let p = params.insert_into(&mut g);
        let batch = cfg.classifier_batch.min(pairs.len()).max(1);
        let mut acc: Option<Tensor> = None;
        for _ in 0..batch {
            let i = rng.below(pairs.len());
            let j = sample_negative(&pairs, i, rng);
            let l = pair_loss(&mut g, &p, params, &pairs[i], &pairs[j])?;
            let scaled = g.scale(l, 1.0 / batch as f64);
            acc = Some(match acc {
                None => scaled,
                Some(a) => g.add(a, scaled)?,
            });
        }
        let total = acc.expect("batch is non-empty");
        let grads = g.backward(total);
        let loss = g.scalar(total);
        if step == 0 {
            first_loss = loss;
        }
        final_loss = loss;
        // classifier parameters only
        let mut updates: Vec<(String, Vec<f64>)> = Vec::new();
        for (name, t) in p.leaves() {
            if params.get(name)?.owner == Submodule::Classifier {
                if let Some(gr) = grads.get(*t) {
                    updates.push((name.clone(), gr.to_vec()));
                }
            }
        }
        for (name, gr) in updates {
            let param = params.get_mut(&name)?;
            adam.step(&name, &mut param.values, &gr)?;
        }
        log.push(LossReport {
            step,
            class_loss: Some(loss),
            class_pairs: batch,
            total: loss,
            ..LossReport::default()
        });
    }
    Ok((
        PretrainReport {
            pairs: pairs.len(),
            steps: cfg.classifier_steps,
            first_loss,
            final_loss,
        },
        log,
    ))
}

/// Classifier quality on a dataset: mean positive score, mean negative
/// score, and pairwise accuracy (positive outranks its negative).
pub fn classifier_scores(
    ds: &Dataset,
    params: &ModelParams,
    rng: &mut RngState,
) -> Result<(f64, f64, f64)> {
    let vocab = &ds.header.vocab;
    let pairs = collect_pairs(ds, vocab)?;
    if pairs.len() < 2 {
        return Err(TrainError::Config(
            "need at least two annotated pairs to score the classifier".into(),
        ));
    }
    let mut pos_sum = 0.0;
    let mut neg_sum = 0.0;
    let mut wins = 0usize;
    for (i, pair) in pairs.iter().enumerate() {
        let j = sample_negative(&pairs, i, rng);
        let mut g = Graph::new();
        let p = params.insert_into(&mut g);
        let y = embed_const(&mut g, params, "dec_act.embed", &pair.action_ids)?;
        let c_pos = embed_const(&mut g, params, "dec_cap.embed", &pair.caption_ids)?;
        let c_neg = embed_const(&mut g, params, "dec_cap.embed", &pairs[j].caption_ids)?;
        let sp = classify_semantic(&mut g, &p, y, c_pos)?;
        let sn = classify_semantic(&mut g, &p, y, c_neg)?;
        let (sp, sn) = (g.scalar(sp), g.scalar(sn));
        pos_sum += sp;
        neg_sum += sn;
        if sp > sn {
            wins += 1;
        }
    }
    let n = pairs.len() as f64;
    Ok((pos_sum / n, neg_sum / n, wins as f64 / n))
}

#[cfg(test)]
pub(crate) fn sample_negative_for_tests(
    captions: &[Vec<String>],
    pos: usize,
    rng: &mut RngState,
) -> usize {
    let pairs: Vec<Pair> = captions
        .iter()
        .map(|c| Pair {
            action_ids: vec![4],
            caption_ids: vec![4],
            caption_tokens: c.clone(),
        })
        .collect();
    sample_negative(&pairs, pos, rng)
}
