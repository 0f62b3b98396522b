//! Simplified METEOR: exact-match unigram alignment (maximal, leftmost
//! tie-break), the alpha-weighted harmonic F-mean, and the chunk
//! fragmentation penalty. Closed class vocabularies make stemming and
//! synonym modules pointless here.

use super::{MetricsError, Result};

const ALPHA: f64 = 0.9;
const BETA: f64 = 3.0;
const GAMMA: f64 = 0.5;

/// Maximal exact alignment, hypothesis scanned left to right, each
/// token matched to the leftmost free identical reference token.
/// Returns (hyp_pos, ref_pos) pairs in hypothesis order.
fn align(hyp: &[String], reference: &[String]) -> Vec<(usize, usize)> {
    let mut taken = vec![false; reference.len()];
    let mut pairs = Vec::new();
    for (hi, h) in hyp.iter().enumerate() {
        for (ri, r) in reference.iter().enumerate() {
            if !taken[ri] && h == r {
                taken[ri] = true;
                pairs.push((hi, ri));
                break;
            }
        }
    }
    pairs
}

fn chunk_count(pairs: &[(usize, usize)]) -> usize {
    let mut chunks = 0;
    let mut prev: Option<(usize, usize)> = None;
    for &(h, r) in pairs {
        let contiguous = matches!(prev, Some((ph, pr)) if h == ph + 1 && r == pr + 1);
        if !contiguous {
            chunks += 1;
        }
        prev = Some((h, r));
    }
    chunks
}

pub fn meteor(hyp: &[String], reference: &[String]) -> Result<f64> {
    if reference.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    if hyp.is_empty() {
        return Ok(0.0);
    }
    let pairs = align(hyp, reference);
    let m = pairs.len() as f64;
    if pairs.is_empty() {
        return Ok(0.0);
    }
    let precision = m / hyp.len() as f64;
    let recall = m / reference.len() as f64;
    let f_mean = precision * recall / (ALPHA * precision + (1.0 - ALPHA) * recall);
    let chunks = chunk_count(&pairs) as f64;
    let penalty = GAMMA * (chunks / m).powf(BETA);
    Ok(f_mean * (1.0 - penalty))
}
