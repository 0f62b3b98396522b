//! Multi-modal encoders: per-modality self-attention stacks with
//! audio/visual cross-attention, and a self-attention-only text encoder.
//! Pre-norm residual blocks throughout, sinusoidal positions.

use super::{GraphParams, ModelConfig, ModelError, Result};
use crate::data::FeatureBundle;
use crate::numerics::{multi_head_attention, AttnProj, Graph, Tensor};

pub const LN_EPS: f64 = 1e-5;

/// Joint encodings of one segment.
#[derive(Clone, Copy)]
pub struct Encodings {
    pub h_a: Tensor,
    pub h_v: Tensor,
    pub h_t: Tensor,
}

pub(crate) fn attn_proj(p: &GraphParams, prefix: &str) -> AttnProj {
    AttnProj {
        wq: p.get(&format!("{prefix}.wq")),
        bq: p.get(&format!("{prefix}.bq")),
        wk: p.get(&format!("{prefix}.wk")),
        bk: p.get(&format!("{prefix}.bk")),
        wv: p.get(&format!("{prefix}.wv")),
        bv: p.get(&format!("{prefix}.bv")),
        wo: p.get(&format!("{prefix}.wo")),
        bo: p.get(&format!("{prefix}.bo")),
    }
}

pub(crate) fn layer_norm(g: &mut Graph, p: &GraphParams, prefix: &str, x: Tensor) -> Result<Tensor> {
    Ok(g.layer_norm(
        x,
        p.get(&format!("{prefix}.g")),
        p.get(&format!("{prefix}.b")),
        LN_EPS,
    )?)
}

pub(crate) fn feed_forward(g: &mut Graph, p: &GraphParams, prefix: &str, x: Tensor) -> Result<Tensor> {
    let h = g.linear(
        x,
        p.get(&format!("{prefix}.w1")),
        p.get(&format!("{prefix}.b1")),
    )?;
    let h = g.relu(h);
    Ok(g.linear(
        h,
        p.get(&format!("{prefix}.w2")),
        p.get(&format!("{prefix}.b2")),
    )?)
}

/// Standard sinusoidal position encoding, entering the graph as a constant.
pub(crate) fn position_encoding(g: &mut Graph, t_len: usize, d: usize) -> Tensor {
    debug_assert!(d % 2 == 0);
    let mut vals = vec![0.0; t_len * d];
    for t in 0..t_len {
        for i in 0..d / 2 {
            let rate = (10_000f64).powf(-(2.0 * i as f64) / d as f64);
            vals[t * d + 2 * i] = (t as f64 * rate).sin();
            vals[t * d + 2 * i + 1] = (t as f64 * rate).cos();
        }
    }
    g.leaf(&[t_len, d], vals).expect("consistent shape")
}

fn self_block(
    g: &mut Graph,
    p: &GraphParams,
    prefix: &str,
    layer: usize,
    x: Tensor,
    heads: usize,
) -> Result<Tensor> {
    let n = layer_norm(g, p, &format!("{prefix}.l{layer}.ln1"), x)?;
    let proj = attn_proj(p, &format!("{prefix}.l{layer}.self"));
    let a = multi_head_attention(g, n, n, n, &proj, heads, None)?;
    Ok(g.add(x, a)?)
}

fn ff_block(
    g: &mut Graph,
    p: &GraphParams,
    prefix: &str,
    layer: usize,
    x: Tensor,
) -> Result<Tensor> {
    let n = layer_norm(g, p, &format!("{prefix}.l{layer}.ln3"), x)?;
    let f = feed_forward(g, p, &format!("{prefix}.l{layer}.ff"), n)?;
    Ok(g.add(x, f)?)
}

/// Encode one feature bundle. A missing subtitle feeds the learned
/// `<unk>` text-feature row instead.
pub fn encode(
    g: &mut Graph,
    p: &GraphParams,
    cfg: &ModelConfig,
    bundle: &FeatureBundle,
) -> Result<Encodings> {
    for (m, d, name) in [
        (&bundle.x_a, cfg.d_audio, "audio"),
        (&bundle.x_v, cfg.d_visual, "visual"),
    ] {
        if m.cols != d {
            return Err(ModelError::Config(format!(
                "{name} feature dim {} does not match model dim {d}",
                m.cols
            )));
        }
        if m.rows == 0 {
            return Err(ModelError::EmptyInput(format!("{name} feature sequence")));
        }
    }
    if let Some(t) = &bundle.x_t {
        if t.cols != cfg.d_text {
            return Err(ModelError::Config(format!(
                "text feature dim {} does not match model dim {}",
                t.cols, cfg.d_text
            )));
        }
        if t.rows == 0 {
            return Err(ModelError::EmptyInput("text feature sequence".into()));
        }
    }

    // input projections plus positions
    let xa = g.leaf_matrix(&bundle.x_a);
    let xv = g.leaf_matrix(&bundle.x_v);
    let mut a = g.linear(xa, p.get("enc.audio.in_proj.w"), p.get("enc.audio.in_proj.b"))?;
    let mut v = g.linear(xv, p.get("enc.visual.in_proj.w"), p.get("enc.visual.in_proj.b"))?;
    let pe_a = position_encoding(g, bundle.x_a.rows, cfg.d_model_av);
    let pe_v = position_encoding(g, bundle.x_v.rows, cfg.d_model_av);
    a = g.add(a, pe_a)?;
    v = g.add(v, pe_v)?;

    for l in 0..cfg.enc_layers {
        a = self_block(g, p, "enc.audio", l, a, cfg.heads)?;
        v = self_block(g, p, "enc.visual", l, v, cfg.heads)?;

        // symmetric cross-attention computed from the pre-update pair
        let an = layer_norm(g, p, &format!("enc.audio.l{l}.ln2"), a)?;
        let vn = layer_norm(g, p, &format!("enc.visual.l{l}.ln2"), v)?;
        let ca = multi_head_attention(
            g,
            an,
            vn,
            vn,
            &attn_proj(p, &format!("enc.audio.l{l}.cross")),
            cfg.heads,
            None,
        )?;
        let cv = multi_head_attention(
            g,
            vn,
            an,
            an,
            &attn_proj(p, &format!("enc.visual.l{l}.cross")),
            cfg.heads,
            None,
        )?;
        a = g.add(a, ca)?;
        v = g.add(v, cv)?;

        a = ff_block(g, p, "enc.audio", l, a)?;
        v = ff_block(g, p, "enc.visual", l, v)?;
    }
    let h_a = layer_norm(g, p, "enc.audio.ln_out", a)?;
    let h_v = layer_norm(g, p, "enc.visual.ln_out", v)?;

    // text stream: subtitle embeddings or the learned <unk> row
    let xt = match &bundle.x_t {
        Some(m) => g.leaf_matrix(m),
        None => p.get("text.unk_row"),
    };
    let t_rows = g.shape(xt)[0];
    let mut t = g.linear(xt, p.get("text.in_proj.w"), p.get("text.in_proj.b"))?;
    let pe_t = position_encoding(g, t_rows, cfg.d_model_text);
    t = g.add(t, pe_t)?;
    for l in 0..cfg.enc_layers {
        t = self_block(g, p, "text", l, t, cfg.heads)?;
        t = ff_block(g, p, "text", l, t)?;
    }
    let h_t = layer_norm(g, p, "text.ln_out", t)?;

    Ok(Encodings { h_a, h_v, h_t })
}

/// Decoder memory: all three encodings projected to decoder width and
/// stacked along time.
pub(crate) fn decoder_memory(
    g: &mut Graph,
    p: &GraphParams,
    prefix: &str,
    enc: &Encodings,
) -> Result<Tensor> {
    let ma = g.linear(
        enc.h_a,
        p.get(&format!("{prefix}.mem_a.w")),
        p.get(&format!("{prefix}.mem_a.b")),
    )?;
    let mv = g.linear(
        enc.h_v,
        p.get(&format!("{prefix}.mem_v.w")),
        p.get(&format!("{prefix}.mem_v.b")),
    )?;
    let mt = g.linear(
        enc.h_t,
        p.get(&format!("{prefix}.mem_t.w")),
        p.get(&format!("{prefix}.mem_t.b")),
    )?;
    let mem = g.concat_rows(&[ma, mv, mt])?;
    layer_norm(g, p, &format!("{prefix}.mem_ln"), mem)
}
