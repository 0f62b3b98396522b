//! Proposal generator: multi-scale 1-D convolutions scanning the
//! audio-visual encodings for segments worth captioning. Forward pass
//! only; it is never trained here.

use super::encoder::Encodings;
use super::{GraphParams, ModelConfig, Result};
use crate::numerics::Graph;
use serde::{Deserialize, Serialize};

/// One segment proposal on the encoder's frame timeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub onset: f64,
    pub offset: f64,
    pub confidence: f64,
    pub scale: usize,
}

/// Scan the encodings with every kernel scale that fits; each anchor
/// position emits a confidence plus center/length offsets. Proposals are
/// sorted by confidence, best first, and always satisfy onset < offset.
pub fn propose_segments(
    g: &mut Graph,
    p: &GraphParams,
    cfg: &ModelConfig,
    enc: &Encodings,
    threshold: f64,
) -> Result<Vec<Proposal>> {
    let t_v = g.shape(enc.h_v)[0];
    let t_a = g.shape(enc.h_a)[0];
    let d = cfg.d_model_av;

    // nearest-frame resample of audio onto the visual timeline, then
    // feature-concat; the generator sees both modalities per frame
    let hv = g.values(enc.h_v).to_vec();
    let ha = g.values(enc.h_a).to_vec();
    let mut joint = vec![0.0; t_v * 2 * d];
    for t in 0..t_v {
        let ai = if t_v <= 1 {
            0
        } else {
            ((t as f64) * (t_a.saturating_sub(1) as f64) / ((t_v - 1) as f64)).round() as usize
        };
        joint[t * 2 * d..t * 2 * d + d].copy_from_slice(&hv[t * d..(t + 1) * d]);
        joint[t * 2 * d + d..(t + 1) * 2 * d].copy_from_slice(&ha[ai * d..(ai + 1) * d]);
    }
    let x = g.leaf(&[t_v, 2 * d], joint)?;

    let mut out = Vec::new();
    for (s, &k) in cfg.proposal_kernels.iter().enumerate() {
        if t_v < k {
            continue; // this scale does not fit the clip
        }
        let conv = g.conv1d_time(x, p.get(&format!("gen.s{s}.conv")), 1)?;
        let conv = g.bias_add(conv, p.get(&format!("gen.s{s}.bias")))?;
        let act = g.relu(conv);
        let head = g.linear(
            act,
            p.get(&format!("gen.s{s}.head.w")),
            p.get(&format!("gen.s{s}.head.b")),
        )?;
        let hv = g.values(head);
        let t_out = g.shape(head)[0];
        for t in 0..t_out {
            let conf = 1.0 / (1.0 + (-hv[t * 3]).exp());
            let d_center = hv[t * 3 + 1];
            let d_len = hv[t * 3 + 2];
            let center = t as f64 + (k - 1) as f64 / 2.0 + d_center.tanh() * k as f64 / 2.0;
            let halflen = (k as f64 / 2.0) * d_len.tanh().exp();
            let onset = (center - halflen).max(0.0);
            let offset = (center + halflen).min(t_v as f64);
            debug_assert!(onset < offset);
            if conf >= threshold {
                out.push(Proposal {
                    onset,
                    offset,
                    confidence: conf,
                    scale: s,
                });
            }
        }
    }
    // best-first, deterministic tie-break on (scale, onset)
    out.sort_by(|a, b| {
        b.confidence
            .partial_cmp(&a.confidence)
            .unwrap()
            .then(a.scale.cmp(&b.scale))
            .then(a.onset.partial_cmp(&b.onset).unwrap())
    });
    Ok(out)
}
