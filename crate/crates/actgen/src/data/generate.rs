//! Synthetic dataset generation. Every segment gets a latent action
//! sequence drawn from the world grammar; visual/audio features are
//! class embeddings plus Gaussian noise, text features are embedded
//! subtitle tokens. Captions and action sequences are two renderings of
//! the same latent steps, which is what makes style transfer and the
//! semantic classifier learnable on this data.

use super::{
    ActionSequence, ActionStep, DataError, Dataset, DatasetHeader, FeatureBundle, Result,
    SegmentRecord, WorldSpec, SCHEMA_VERSION,
};
use crate::numerics::{Matrix, RngState};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenConfig {
    pub n_videos: usize,
    pub segments_per_video: usize,
    pub d_audio: usize,
    pub d_visual: usize,
    pub d_text: usize,
    /// Fraction of segments carrying each annotation kind. A segment
    /// that would end up with neither actions nor caption keeps its
    /// caption, so every record is usable for training.
    pub actions_frac: f64,
    pub captions_frac: f64,
    pub subtitles_frac: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_videos: 8,
            segments_per_video: 8,
            d_audio: 32,
            d_visual: 48,
            d_text: 16,
            actions_frac: 1.0,
            captions_frac: 1.0,
            subtitles_frac: 1.0,
            seed: 0,
        }
    }
}

// Embedding-stream tags; each (tag, index) pair owns one fixed vector.
const TAG_VIS_VERB: u64 = 1;
const TAG_VIS_NOUN: u64 = 2;
const TAG_AUD_VERB: u64 = 3;
const TAG_TEXT_WORD: u64 = 4;

fn class_embedding(seed: u64, tag: u64, index: usize, dim: usize) -> Vec<f64> {
    let mut rng = RngState::new(seed).derive(tag).derive(index as u64);
    (0..dim).map(|_| rng.normal()).collect()
}

/// Noise-free visual embedding of one action step: verb embedding plus
/// the mean of its noun embeddings.
pub fn step_visual_embedding(world: &WorldSpec, step: &ActionStep, d_visual: usize) -> Vec<f64> {
    let vi = world
        .verbs
        .iter()
        .position(|v| v.name == step.verb)
        .expect("verb in world");
    let mut base = class_embedding(world.embedding_seed, TAG_VIS_VERB, vi, d_visual);
    if !step.nouns.is_empty() {
        let scale = 1.0 / step.nouns.len() as f64;
        for n in &step.nouns {
            let ni = world.nouns.iter().position(|x| x == n).expect("noun in world");
            let emb = class_embedding(world.embedding_seed, TAG_VIS_NOUN, ni, d_visual);
            for (b, e) in base.iter_mut().zip(&emb) {
                *b += e * scale;
            }
        }
    }
    base
}

fn step_audio_embedding(world: &WorldSpec, step: &ActionStep, d_audio: usize) -> Vec<f64> {
    let vi = world
        .verbs
        .iter()
        .position(|v| v.name == step.verb)
        .expect("verb in world");
    class_embedding(world.embedding_seed, TAG_AUD_VERB, vi, d_audio)
}

fn sample_step(world: &WorldSpec, rng: &mut RngState) -> ActionStep {
    let verb = &world.verbs[rng.below(world.verbs.len())];
    let pattern = &verb.patterns[rng.below(verb.patterns.len())];
    let mut nouns: Vec<String> = Vec::with_capacity(pattern.len());
    for slot in pattern {
        // resample on duplicates within the step
        let mut pick = slot[rng.below(slot.len())].clone();
        while nouns.contains(&pick) {
            pick = slot[rng.below(slot.len())].clone();
        }
        nouns.push(pick);
    }
    ActionStep {
        verb: verb.name.clone(),
        nouns,
    }
}

fn caption_for(world: &WorldSpec, steps: &[ActionStep]) -> Vec<String> {
    let mut out = Vec::new();
    for (i, step) in steps.iter().enumerate() {
        if i > 0 {
            out.push(world.step_connector.clone());
        }
        let spec = world.verb(&step.verb).expect("verb in world");
        let tmpl = &spec.templates[&step.nouns.len()];
        for tok in tmpl {
            if let Some(rest) = tok.strip_prefix('{') {
                let idx: usize = rest.trim_end_matches('}').parse().expect("slot index");
                out.push(step.nouns[idx].clone());
            } else {
                out.push(tok.clone());
            }
        }
    }
    out
}

fn subtitle_for(world: &WorldSpec, caption: &[String], rng: &mut RngState) -> Vec<String> {
    let mut out = Vec::new();
    out.push(world.subtitle_fillers[rng.below(world.subtitle_fillers.len())].clone());
    for tok in caption {
        if rng.uniform() < 0.15 {
            out.push(world.subtitle_fillers[rng.below(world.subtitle_fillers.len())].clone());
        }
        out.push(tok.clone());
    }
    out
}

pub fn generate_dataset(world: &WorldSpec, config: &GenConfig) -> Result<Dataset> {
    world.validate()?;
    for (name, f) in [
        ("actions_frac", config.actions_frac),
        ("captions_frac", config.captions_frac),
        ("subtitles_frac", config.subtitles_frac),
    ] {
        if !(0.0..=1.0).contains(&f) {
            return Err(DataError::Config(format!("{name} must be in [0,1], got {f}")));
        }
    }
    if config.n_videos == 0 || config.segments_per_video == 0 {
        return Err(DataError::Config("empty dataset requested".into()));
    }

    let vocab = world.vocab();
    let mut records = Vec::new();
    let mut features = Vec::new();
    let base_rng = RngState::new(config.seed);

    for v in 0..config.n_videos {
        let video_rng = base_rng.derive(v as u64);
        let video_id = format!("synth-{v:04}");
        for s in 0..config.segments_per_video {
            let mut rng = video_rng.derive(s as u64);
            let n_steps = 1 + rng.below(world.max_steps_per_segment);
            let steps: Vec<ActionStep> = (0..n_steps).map(|_| sample_step(world, &mut rng)).collect();
            let caption = caption_for(world, &steps);
            let subtitle = subtitle_for(world, &caption, &mut rng);

            let has_actions = rng.uniform() < config.actions_frac;
            let mut has_caption = rng.uniform() < config.captions_frac;
            let has_subtitle = rng.uniform() < config.subtitles_frac;
            if !has_actions && !has_caption {
                has_caption = true;
            }

            let mut x_v = Matrix::zeros(n_steps * world.frames_per_step, config.d_visual);
            let mut x_a = Matrix::zeros(n_steps * world.frames_per_step, config.d_audio);
            for (si, step) in steps.iter().enumerate() {
                let vis = step_visual_embedding(world, step, config.d_visual);
                let aud = step_audio_embedding(world, step, config.d_audio);
                for f in 0..world.frames_per_step {
                    let row = si * world.frames_per_step + f;
                    for (c, base) in vis.iter().enumerate() {
                        x_v.row_mut(row)[c] = base + world.noise_scale * rng.normal();
                    }
                    for (c, base) in aud.iter().enumerate() {
                        x_a.row_mut(row)[c] = base + world.noise_scale * rng.normal();
                    }
                }
            }
            let x_t = if has_subtitle {
                let mut m = Matrix::zeros(subtitle.len(), config.d_text);
                for (r, tok) in subtitle.iter().enumerate() {
                    let emb = class_embedding(
                        world.embedding_seed,
                        TAG_TEXT_WORD,
                        vocab.word_id(tok),
                        config.d_text,
                    );
                    m.row_mut(r).copy_from_slice(&emb);
                }
                Some(m)
            } else {
                None
            };

            let onset = s as f64 * 4.0;
            records.push(SegmentRecord {
                video_id: video_id.clone(),
                segment_index: s,
                onset,
                offset: onset + 3.0,
                caption: has_caption.then(|| caption.clone()),
                actions: has_actions.then(|| ActionSequence(steps.clone())),
                subtitle: has_subtitle.then(|| subtitle.clone()),
                feature_ref: None,
            });
            features.push(FeatureBundle { x_a, x_v, x_t });
        }
    }

    let ds = Dataset {
        header: DatasetHeader {
            schema_version: SCHEMA_VERSION,
            d_audio: config.d_audio,
            d_visual: config.d_visual,
            d_text: config.d_text,
            vocab,
        },
        records,
        features,
    };
    ds.validate()?;
    Ok(ds)
}
