//! Scaled dot-product multi-head attention, composed from graph
//! primitives so the backward pass falls out of the tape.

use super::{Graph, NumericsError, Result, Tensor};

/// Projection parameters for one attention block.
#[derive(Clone, Copy)]
pub struct AttnProj {
    pub wq: Tensor,
    pub bq: Tensor,
    pub wk: Tensor,
    pub bk: Tensor,
    pub wv: Tensor,
    pub bv: Tensor,
    pub wo: Tensor,
    pub bo: Tensor,
}

pub enum AttnMask<'a> {
    /// Position i may attend to positions <= i.
    Causal,
    /// Row-major `Tq x Tk`; `true` blocks the pair.
    Blocked(&'a [bool]),
}

pub fn multi_head_attention(
    g: &mut Graph,
    q: Tensor,
    k: Tensor,
    v: Tensor,
    proj: &AttnProj,
    heads: usize,
    mask: Option<AttnMask>,
) -> Result<Tensor> {
    let d = *g.shape(q).last().unwrap();
    if heads == 0 || d % heads != 0 {
        return Err(NumericsError::Config(format!(
            "model width {d} is not divisible by {heads} heads"
        )));
    }
    let tq = g.shape(q)[0];
    let tk = g.shape(k)[0];
    if let Some(AttnMask::Blocked(m)) = &mask {
        if m.len() != tq * tk {
            return Err(NumericsError::ShapeMismatch {
                op: "multi_head_attention",
                lhs: vec![tq, tk],
                rhs: vec![m.len()],
            });
        }
    }
    let dh = d / heads;
    let qp = g.linear(q, proj.wq, proj.bq)?;
    let kp = g.linear(k, proj.wk, proj.bk)?;
    let vp = g.linear(v, proj.wv, proj.bv)?;

    // additive mask: large negative on blocked pairs, zero elsewhere
    let mask_leaf = match &mask {
        None => None,
        Some(m) => {
            let mut add = vec![0.0; tq * tk];
            match m {
                AttnMask::Causal => {
                    for i in 0..tq {
                        for j in 0..tk {
                            if j > i {
                                add[i * tk + j] = -1e30;
                            }
                        }
                    }
                }
                AttnMask::Blocked(b) => {
                    for (a, &blocked) in add.iter_mut().zip(b.iter()) {
                        if blocked {
                            *a = -1e30;
                        }
                    }
                }
            }
            Some(g.leaf(&[tq, tk], add)?)
        }
    };

    let mut head_outs = Vec::with_capacity(heads);
    for h in 0..heads {
        let qh = g.slice_cols(qp, h * dh, (h + 1) * dh)?;
        let kh = g.slice_cols(kp, h * dh, (h + 1) * dh)?;
        let vh = g.slice_cols(vp, h * dh, (h + 1) * dh)?;
        let scores = g.matmul_nt(qh, kh)?;
        let mut scores = g.scale(scores, 1.0 / (dh as f64).sqrt());
        if let Some(m) = mask_leaf {
            scores = g.add(scores, m)?;
        }
        let attn = g.softmax(scores, 1)?;
        head_outs.push(g.matmul(attn, vh)?);
    }
    let concat = g.concat_cols(&head_outs)?;
    g.linear(concat, proj.wo, proj.bo)
}
