//! Named parameter bank. Every tensor belongs to exactly one submodule;
//! that partition is what the training freeze/skip contracts key on.

use super::{ModelConfig, ModelError, Result};
use crate::numerics::{Graph, RngState, Tensor};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Submodule {
    AvEncoder,
    TextEncoder,
    CaptionDecoder,
    ActionDecoder,
    ProposalGenerator,
    Classifier,
}

impl Submodule {
    pub fn of_name(name: &str) -> Option<Submodule> {
        let prefix = name.split('.').next()?;
        Some(match prefix {
            "enc" => Submodule::AvEncoder,
            "text" => Submodule::TextEncoder,
            "dec_cap" => Submodule::CaptionDecoder,
            "dec_act" => Submodule::ActionDecoder,
            "gen" => Submodule::ProposalGenerator,
            "cls" => Submodule::Classifier,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub owner: Submodule,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub config: ModelConfig,
    params: BTreeMap<String, Param>,
}

/// Leaf handles for one graph, keyed by parameter name.
pub struct GraphParams {
    map: BTreeMap<String, Tensor>,
}

impl GraphParams {
    pub fn get(&self, name: &str) -> Tensor {
        *self
            .map
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter `{name}`"))
    }

    pub fn leaves(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.map.iter()
    }
}

fn name_hash(name: &str) -> u64 {
    // FNV-1a; init streams are keyed per parameter name
    let mut h: u64 = 0xcbf29ce484222325;
    for b in name.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

impl ModelParams {
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut p = ModelParams {
            config: config.clone(),
            params: BTreeMap::new(),
        };
        let base = RngState::new(seed).derive(0x9a7a);
        let c = config;

        // ── audio-visual encoder ──
        p.matrix(&base, "enc.audio.in_proj.w", c.d_audio, c.d_model_av);
        p.bias("enc.audio.in_proj.b", c.d_model_av);
        p.matrix(&base, "enc.visual.in_proj.w", c.d_visual, c.d_model_av);
        p.bias("enc.visual.in_proj.b", c.d_model_av);
        for m in ["audio", "visual"] {
            for l in 0..c.enc_layers {
                p.attn_block(&base, &format!("enc.{m}.l{l}.self"), c.d_model_av);
                p.attn_block(&base, &format!("enc.{m}.l{l}.cross"), c.d_model_av);
                p.ln(&format!("enc.{m}.l{l}.ln1"), c.d_model_av);
                p.ln(&format!("enc.{m}.l{l}.ln2"), c.d_model_av);
                p.ln(&format!("enc.{m}.l{l}.ln3"), c.d_model_av);
                p.ff_block(&base, &format!("enc.{m}.l{l}.ff"), c.d_model_av, c.ff_av());
            }
            p.ln(&format!("enc.{m}.ln_out"), c.d_model_av);
        }

        // ── text encoder ──
        p.matrix(&base, "text.in_proj.w", c.d_text, c.d_model_text);
        p.bias("text.in_proj.b", c.d_model_text);
        p.gaussian(&base, "text.unk_row", &[1, c.d_text], 0.1);
        for l in 0..c.enc_layers {
            p.attn_block(&base, &format!("text.l{l}.self"), c.d_model_text);
            p.ln(&format!("text.l{l}.ln1"), c.d_model_text);
            p.ln(&format!("text.l{l}.ln3"), c.d_model_text);
            p.ff_block(&base, &format!("text.l{l}.ff"), c.d_model_text, c.ff_text());
        }
        p.ln("text.ln_out", c.d_model_text);

        // ── decoders ──
        for (prefix, vocab) in [("dec_cap", c.word_vocab), ("dec_act", c.action_vocab)] {
            p.gaussian(&base, &format!("{prefix}.embed"), &[vocab, c.d_model_dec], 0.1);
            p.matrix(&base, &format!("{prefix}.mem_a.w"), c.d_model_av, c.d_model_dec);
            p.bias(&format!("{prefix}.mem_a.b"), c.d_model_dec);
            p.matrix(&base, &format!("{prefix}.mem_v.w"), c.d_model_av, c.d_model_dec);
            p.bias(&format!("{prefix}.mem_v.b"), c.d_model_dec);
            p.matrix(&base, &format!("{prefix}.mem_t.w"), c.d_model_text, c.d_model_dec);
            p.bias(&format!("{prefix}.mem_t.b"), c.d_model_dec);
            p.ln(&format!("{prefix}.mem_ln"), c.d_model_dec);
            for l in 0..c.dec_layers {
                p.attn_block(&base, &format!("{prefix}.l{l}.self"), c.d_model_dec);
                p.attn_block(&base, &format!("{prefix}.l{l}.cross"), c.d_model_dec);
                p.ln(&format!("{prefix}.l{l}.ln1"), c.d_model_dec);
                p.ln(&format!("{prefix}.l{l}.ln2"), c.d_model_dec);
                p.ln(&format!("{prefix}.l{l}.ln3"), c.d_model_dec);
                p.ff_block(&base, &format!("{prefix}.l{l}.ff"), c.d_model_dec, c.ff_dec());
            }
            p.ln(&format!("{prefix}.ln_out"), c.d_model_dec);
            p.matrix(&base, &format!("{prefix}.out_proj.w"), c.d_model_dec, vocab);
            p.bias(&format!("{prefix}.out_proj.b"), vocab);
        }

        // ── proposal generator ──
        for (s, k) in c.proposal_kernels.iter().enumerate() {
            let d_in = 2 * c.d_model_av;
            p.conv(&base, &format!("gen.s{s}.conv"), *k, d_in, c.proposal_hidden);
            p.bias(&format!("gen.s{s}.bias"), c.proposal_hidden);
            p.matrix(&base, &format!("gen.s{s}.head.w"), c.proposal_hidden, 3);
            p.bias(&format!("gen.s{s}.head.b"), 3);
        }

        // ── semantic classifier ──
        p.matrix(&base, "cls.fc1.w", 2 * c.d_model_dec, c.classifier_hidden);
        p.bias("cls.fc1.b", c.classifier_hidden);
        p.matrix(&base, "cls.fc2.w", c.classifier_hidden, 1);
        p.bias("cls.fc2.b", 1);

        Ok(p)
    }

    fn insert(&mut self, name: &str, shape: Vec<usize>, values: Vec<f64>) {
        let owner = Submodule::of_name(name)
            .unwrap_or_else(|| panic!("parameter `{name}` has no owning submodule"));
        let prev = self.params.insert(
            name.to_string(),
            Param {
                owner,
                shape,
                values,
            },
        );
        debug_assert!(prev.is_none(), "duplicate parameter `{name}`");
    }

    fn matrix(&mut self, base: &RngState, name: &str, rows: usize, cols: usize) {
        // Glorot-uniform
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        let mut rng = base.derive(name_hash(name));
        let values = (0..rows * cols)
            .map(|_| (rng.uniform() * 2.0 - 1.0) * limit)
            .collect();
        self.insert(name, vec![rows, cols], values);
    }

    fn conv(&mut self, base: &RngState, name: &str, k: usize, d_in: usize, d_out: usize) {
        let limit = (6.0 / (k * d_in + d_out) as f64).sqrt();
        let mut rng = base.derive(name_hash(name));
        let values = (0..k * d_in * d_out)
            .map(|_| (rng.uniform() * 2.0 - 1.0) * limit)
            .collect();
        self.insert(name, vec![k, d_in, d_out], values);
    }

    fn gaussian(&mut self, base: &RngState, name: &str, shape: &[usize], scale: f64) {
        let mut rng = base.derive(name_hash(name));
        let n: usize = shape.iter().product();
        let values = (0..n).map(|_| rng.normal() * scale).collect();
        self.insert(name, shape.to_vec(), values);
    }

    fn bias(&mut self, name: &str, n: usize) {
        self.insert(name, vec![n], vec![0.0; n]);
    }

    fn ln(&mut self, prefix: &str, n: usize) {
        self.insert(&format!("{prefix}.g"), vec![n], vec![1.0; n]);
        self.insert(&format!("{prefix}.b"), vec![n], vec![0.0; n]);
    }

    fn attn_block(&mut self, base: &RngState, prefix: &str, d: usize) {
        for w in ["wq", "wk", "wv", "wo"] {
            self.matrix(base, &format!("{prefix}.{w}"), d, d);
        }
        for b in ["bq", "bk", "bv", "bo"] {
            self.bias(&format!("{prefix}.{b}"), d);
        }
    }

    fn ff_block(&mut self, base: &RngState, prefix: &str, d: usize, ff: usize) {
        self.matrix(base, &format!("{prefix}.w1"), d, ff);
        self.bias(&format!("{prefix}.b1"), ff);
        self.matrix(base, &format!("{prefix}.w2"), ff, d);
        self.bias(&format!("{prefix}.b2"), d);
    }

    pub fn get(&self, name: &str) -> Result<&Param> {
        self.params
            .get(name)
            .ok_or_else(|| ModelError::UnknownParam(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Param> {
        self.params
            .get_mut(name)
            .ok_or_else(|| ModelError::UnknownParam(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Param)> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Param)> {
        self.params.iter_mut()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn total_values(&self) -> usize {
        self.params.values().map(|p| p.values.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.params
            .values()
            .all(|p| p.values.iter().all(|v| v.is_finite()))
    }

    /// Insert every parameter into a graph as a leaf; the returned map is
    /// what the forward functions read.
    pub fn insert_into(&self, g: &mut Graph) -> GraphParams {
        let mut map = BTreeMap::new();
        for (name, p) in &self.params {
            let t = g
                .leaf(&p.shape, p.values.clone())
                .expect("parameter shape/values consistent");
            map.insert(name.clone(), t);
        }
        GraphParams { map }
    }
}
