//! Semantic classifier: judges whether an action-token sequence and a
//! caption carry the same content. Mean-pools both embedding sequences,
//! concatenates, and runs a two-layer feed-forward net to a sigmoid.

use super::{GraphParams, ModelError, Result};
use crate::numerics::{Graph, Tensor};

/// Probability (scalar node in (0,1)) that the two embedded sequences
/// describe the same content. Inputs are `T x d_model_dec` embedding
/// sequences; soft-token sequences pass their expected embeddings.
pub fn classify_semantic(
    g: &mut Graph,
    p: &GraphParams,
    y_emb: Tensor,
    c_emb: Tensor,
) -> Result<Tensor> {
    for (t, side) in [(y_emb, "action"), (c_emb, "caption")] {
        if g.shape(t)[0] == 0 {
            return Err(ModelError::EmptyInput(format!("{side} embedding sequence")));
        }
    }
    let py = g.mean_rows(y_emb);
    let pc = g.mean_rows(c_emb);
    let x = g.concat_cols(&[py, pc])?;
    let h = g.linear(x, p.get("cls.fc1.w"), p.get("cls.fc1.b"))?;
    let h = g.relu(h);
    let o = g.linear(h, p.get("cls.fc2.w"), p.get("cls.fc2.b"))?;
    Ok(g.sigmoid(o))
}
