//! Phase-structured training loop with validation-based model selection.

use super::losses::{finetune_weak_step, multitask_step, GradMap};
use super::{LossReport, Result, TrainConfig, TrainError};
use crate::data::Dataset;
use crate::decode::{decode_sequence, DecodeConfig, Strategy};
use crate::metrics::meteor;
use crate::model::{encode, Checkpoint, CheckpointMeta, DecoderHead, ModelConfig, ModelParams};
use crate::numerics::{Adam, AdamConfig, Graph, RngState};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    /// Action-annotated records only, caption decoder unused.
    Baseline,
    /// Caption and action cross-entropies over all annotated records.
    Multitask,
    /// Multi-task plus the weakly-supervised term on caption-only batches.
    FinetuneWeak,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Baseline => "baseline",
            Phase::Multitask => "multitask",
            Phase::FinetuneWeak => "finetune-weak",
        }
    }
}

impl std::str::FromStr for Phase {
    type Err = TrainError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Phase::Baseline),
            "multitask" => Ok(Phase::Multitask),
            "finetune-weak" => Ok(Phase::FinetuneWeak),
            other => Err(TrainError::Config(format!("unknown phase `{other}`"))),
        }
    }
}

pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub log: Vec<LossReport>,
}

fn make_batches(
    phase: Phase,
    ds: &Dataset,
    rng: &mut RngState,
    batch_size: usize,
) -> Result<Vec<Vec<usize>>> {
    let with_actions: Vec<usize> = (0..ds.len())
        .filter(|i| ds.records[*i].actions.is_some())
        .collect();
    let caption_only: Vec<usize> = (0..ds.len())
        .filter(|i| ds.records[*i].actions.is_none() && ds.records[*i].caption.is_some())
        .collect();
    let chunk = |mut idx: Vec<usize>, rng: &mut RngState| -> Vec<Vec<usize>> {
        rng.shuffle(&mut idx);
        idx.chunks(batch_size).map(|c| c.to_vec()).collect()
    };
    let mut batches = match phase {
        Phase::Baseline => {
            if with_actions.is_empty() {
                return Err(TrainError::Data(
                    "baseline phase needs action-annotated records".into(),
                ));
            }
            chunk(with_actions, rng)
        }
        Phase::Multitask => {
            let all: Vec<usize> = (0..ds.len())
                .filter(|i| ds.records[*i].has_training_annotation())
                .collect();
            if all.is_empty() {
                return Err(TrainError::Data("no annotated records to train on".into()));
            }
            chunk(all, rng)
        }
        // caption-only records get their own batches so the weak term
        // actually fires; action-bearing batches train the plain
        // multi-task objective
        Phase::FinetuneWeak => {
            let mut b = chunk(with_actions, rng);
            b.extend(chunk(caption_only, rng));
            if b.is_empty() {
                return Err(TrainError::Data("no annotated records to train on".into()));
            }
            b
        }
    };
    rng.shuffle(&mut batches);
    Ok(batches)
}

/// Mean greedy-decode METEOR over the action-annotated validation
/// segments; `None` when the set has no action references.
pub fn validation_meteor(params: &ModelParams, val: &Dataset) -> Result<Option<f64>> {
    let vocab = &val.header.vocab;
    let dcfg = DecodeConfig {
        strategy: Strategy::Greedy,
        max_len: 16,
        ..DecodeConfig::default()
    };
    let mut sum = 0.0;
    let mut n = 0usize;
    for (rec, feats) in val.records.iter().zip(&val.features) {
        let Some(actions) = &rec.actions else {
            continue;
        };
        let reference = actions.token_strings();
        if reference.is_empty() {
            continue;
        }
        let mut g = Graph::new();
        let p = params.insert_into(&mut g);
        let enc = encode(&mut g, &p, &params.config, feats)?;
        let decoded = decode_sequence(
            &mut g,
            &p,
            &params.config,
            DecoderHead::Action,
            &enc,
            &dcfg,
            vocab,
        )?;
        let hyp: Vec<String> = decoded
            .tokens
            .iter()
            .map(|t| vocab.action_token_name(*t).to_string())
            .collect();
        sum += meteor(&hyp, &reference)?;
        n += 1;
    }
    Ok(if n == 0 { None } else { Some(sum / n as f64) })
}

fn apply_grads(
    adam: &mut Adam,
    params: &mut ModelParams,
    grads: &GradMap,
) -> Result<()> {
    for (name, gr) in grads {
        let p = params.get_mut(name)?;
        adam.step(name, &mut p.values, gr)?;
    }
    Ok(())
}

/// Run one training phase. `init` carries the warm-start checkpoint;
/// fine-tuning requires a multi-task checkpoint with a pre-trained
/// classifier. The returned checkpoint holds the weights of the best
/// validation step (falling back to the final step without validation).
pub fn train(
    train_ds: &Dataset,
    val_ds: Option<&Dataset>,
    phase: Phase,
    init: Option<Checkpoint>,
    fresh_config: Option<ModelConfig>,
    tcfg: &TrainConfig,
    log_path: Option<&Path>,
    ckpt_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    tcfg.validate()?;
    train_ds.validate()?;
    let vocab = train_ds.header.vocab.clone();

    let (mut params, classifier_pretrained) = match (&init, phase) {
        (Some(ckpt), Phase::FinetuneWeak) => {
            if !ckpt.meta.classifier_pretrained {
                return Err(TrainError::Config(
                    "fine-tuning requires a checkpoint with a pre-trained classifier".into(),
                ));
            }
            if ckpt.meta.phase != "multitask" && ckpt.meta.phase != "finetune-weak" {
                return Err(TrainError::Config(format!(
                    "fine-tuning requires a multitask checkpoint, got phase `{}`",
                    ckpt.meta.phase
                )));
            }
            (ckpt.params.clone(), true)
        }
        (None, Phase::FinetuneWeak) => {
            return Err(TrainError::Config(
                "fine-tuning requires a multitask checkpoint and a pre-trained classifier".into(),
            ));
        }
        (Some(ckpt), _) => (ckpt.params.clone(), ckpt.meta.classifier_pretrained),
        (None, _) => {
            let cfg = fresh_config.unwrap_or_else(|| ModelConfig::desk(&vocab));
            (ModelParams::init(&cfg, tcfg.seed)?, false)
        }
    };
    if let Some(ckpt) = &init {
        if ckpt.vocab != vocab {
            return Err(TrainError::Config(
                "checkpoint vocabulary does not match the dataset".into(),
            ));
        }
    }
    if params.config.word_vocab != vocab.word_vocab_size()
        || params.config.action_vocab != vocab.action_vocab_size()
    {
        return Err(TrainError::Config(
            "model vocabulary sizes do not match the dataset".into(),
        ));
    }

    let mut adam = Adam::new(AdamConfig {
        lr: tcfg.lr,
        ..AdamConfig::default()
    });
    let mut rng = RngState::new(tcfg.seed).derive(match phase {
        Phase::Baseline => 0xb0,
        Phase::Multitask => 0x517,
        Phase::FinetuneWeak => 0xf1e,
    });

    let mut log: Vec<LossReport> = Vec::with_capacity(tcfg.steps as usize);
    let mut batches: Vec<Vec<usize>> = Vec::new();
    let mut best: Option<(f64, u64, ModelParams)> = None;

    // step-0 evaluation: warm-started weights compete for selection
    if tcfg.eval_every > 0 {
        if let Some(val) = val_ds {
            if let Some(m) = validation_meteor(&params, val)? {
                best = Some((m, 0, params.clone()));
            }
        }
    }

    for step in 0..tcfg.steps {
        if batches.is_empty() {
            batches = make_batches(phase, train_ds, &mut rng, tcfg.batch_size)?;
        }
        let batch_idx = batches.remove(0);
        let batch: Vec<(&crate::data::SegmentRecord, &crate::data::FeatureBundle)> = batch_idx
            .iter()
            .map(|&i| (&train_ds.records[i], &train_ds.features[i]))
            .collect();
        let (grads, mut report) = match phase {
            Phase::Baseline => multitask_step(&batch, &params, &vocab, tcfg, false)?,
            Phase::Multitask => multitask_step(&batch, &params, &vocab, tcfg, true)?,
            Phase::FinetuneWeak => {
                finetune_weak_step(&batch, &params, &vocab, tcfg, &mut rng, classifier_pretrained)?
            }
        };
        apply_grads(&mut adam, &mut params, &grads)?;
        report.step = step;
        log.push(report);

        let step1 = step + 1;
        if tcfg.eval_every > 0 && step1 % tcfg.eval_every == 0 && step1 < tcfg.steps {
            if let Some(val) = val_ds {
                if let Some(m) = validation_meteor(&params, val)? {
                    if best.as_ref().map_or(true, |(b, _, _)| m > *b) {
                        best = Some((m, step1, params.clone()));
                    }
                }
            }
        }
        if tcfg.checkpoint_every > 0 && step1 % tcfg.checkpoint_every == 0 {
            if let Some(dir) = ckpt_dir {
                let ckpt = Checkpoint::new(
                    vocab.clone(),
                    params.clone(),
                    rng.clone(),
                    CheckpointMeta {
                        phase: phase.as_str().to_string(),
                        step: step1,
                        selected_step: None,
                        best_val_meteor: None,
                        classifier_pretrained,
                    },
                );
                ckpt.save(&dir.join(format!("ckpt-{step1:06}.json")))?;
            }
        }
    }

    // final evaluation so the last step competes for selection
    if let Some(val) = val_ds {
        if let Some(m) = validation_meteor(&params, val)? {
            if best.as_ref().map_or(true, |(b, _, _)| m > *b) {
                best = Some((m, tcfg.steps, params.clone()));
            }
        }
    }
    let (selected_step, best_val_meteor, final_params) = match best {
        Some((m, s, p)) => (Some(s), Some(m), p),
        None => (None, None, params),
    };

    if let Some(path) = log_path {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        for rep in &log {
            serde_json::to_writer(&mut w, rep)
                .map_err(|e| TrainError::Config(e.to_string()))?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
    }

    let checkpoint = Checkpoint::new(
        vocab,
        final_params,
        rng,
        CheckpointMeta {
            phase: phase.as_str().to_string(),
            step: tcfg.steps,
            selected_step,
            best_val_meteor,
            classifier_pretrained,
        },
    );
    Ok(TrainOutcome { checkpoint, log })
}
