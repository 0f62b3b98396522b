//! Autoregressive decoders. One architecture, two heads: the caption
//! decoder over the word vocabulary and the action-sequence decoder over
//! the verb/noun class vocabulary. Both cross-attend to the stacked
//! audio/visual/text memory.

use super::encoder::{
    attn_proj, decoder_memory, feed_forward, layer_norm, position_encoding, Encodings,
};
use super::{GraphParams, ModelConfig, ModelError, Result};
use crate::data::SOS;
use crate::numerics::{multi_head_attention, AttnMask, Graph, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecoderHead {
    Caption,
    Action,
}

impl DecoderHead {
    pub fn prefix(self) -> &'static str {
        match self {
            DecoderHead::Caption => "dec_cap",
            DecoderHead::Action => "dec_act",
        }
    }

    pub fn vocab_size(self, cfg: &ModelConfig) -> usize {
        match self {
            DecoderHead::Caption => cfg.word_vocab,
            DecoderHead::Action => cfg.action_vocab,
        }
    }
}

/// Full teacher-forced forward pass from already-embedded inputs:
/// `emb: L x d_dec` in, `L x V` logits out. Soft (expected) embeddings
/// flow through here during weakly-supervised sampling.
pub fn decoder_logits_from_embeddings(
    g: &mut Graph,
    p: &GraphParams,
    cfg: &ModelConfig,
    head: DecoderHead,
    enc: &Encodings,
    emb: Tensor,
) -> Result<Tensor> {
    let prefix = head.prefix();
    let len = g.shape(emb)[0];
    if len > cfg.max_len {
        return Err(ModelError::SequenceTooLong {
            len,
            max: cfg.max_len,
        });
    }
    let pe = position_encoding(g, len, cfg.d_model_dec);
    let mut y = g.add(emb, pe)?;
    let mem = decoder_memory(g, p, prefix, enc)?;
    for l in 0..cfg.dec_layers {
        let n = layer_norm(g, p, &format!("{prefix}.l{l}.ln1"), y)?;
        let sa = multi_head_attention(
            g,
            n,
            n,
            n,
            &attn_proj(p, &format!("{prefix}.l{l}.self")),
            cfg.heads,
            Some(AttnMask::Causal),
        )?;
        y = g.add(y, sa)?;

        let n = layer_norm(g, p, &format!("{prefix}.l{l}.ln2"), y)?;
        let ca = multi_head_attention(
            g,
            n,
            mem,
            mem,
            &attn_proj(p, &format!("{prefix}.l{l}.cross")),
            cfg.heads,
            None,
        )?;
        y = g.add(y, ca)?;

        let n = layer_norm(g, p, &format!("{prefix}.l{l}.ln3"), y)?;
        let ff = feed_forward(g, p, &format!("{prefix}.l{l}.ff"), n)?;
        y = g.add(y, ff)?;
    }
    let y = layer_norm(g, p, &format!("{prefix}.ln_out"), y)?;
    Ok(g.linear(
        y,
        p.get(&format!("{prefix}.out_proj.w")),
        p.get(&format!("{prefix}.out_proj.b")),
    )?)
}

/// Teacher-forced logits for a token prefix (must start with `<sos>`).
pub fn decoder_logits(
    g: &mut Graph,
    p: &GraphParams,
    cfg: &ModelConfig,
    head: DecoderHead,
    enc: &Encodings,
    prefix_ids: &[usize],
) -> Result<Tensor> {
    if prefix_ids.first() != Some(&SOS) {
        return Err(ModelError::Config(
            "decoder prefix must begin with <sos>".into(),
        ));
    }
    let table = p.get(&format!("{}.embed", head.prefix()));
    let emb = g.embed(table, prefix_ids)?;
    decoder_logits_from_embeddings(g, p, cfg, head, enc, emb)
}

/// Next-token logits: the last row of the teacher-forced pass, shape `1 x V`.
pub fn decode_step(
    g: &mut Graph,
    p: &GraphParams,
    cfg: &ModelConfig,
    head: DecoderHead,
    enc: &Encodings,
    prefix_ids: &[usize],
) -> Result<Tensor> {
    let logits = decoder_logits(g, p, cfg, head, enc, prefix_ids)?;
    let len = g.shape(logits)[0];
    Ok(g.slice_rows(logits, len - 1, len)?)
}
