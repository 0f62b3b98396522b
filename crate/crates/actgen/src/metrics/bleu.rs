//! BLEU-1/2: modified n-gram precision with brevity penalty. Corpus
//! scores aggregate clipped counts corpus-wide rather than averaging
//! per-segment scores.

use super::{MetricsError, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Clipped-match and total counts per order, plus lengths. Adding two
/// stats objects gives the corpus aggregate.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BleuStats {
    pub matched: Vec<usize>,
    pub total: Vec<usize>,
    pub hyp_len: usize,
    pub ref_len: usize,
}

impl BleuStats {
    pub fn accumulate(&mut self, other: &BleuStats) {
        if self.matched.len() < other.matched.len() {
            self.matched.resize(other.matched.len(), 0);
            self.total.resize(other.total.len(), 0);
        }
        for (a, b) in self.matched.iter_mut().zip(&other.matched) {
            *a += b;
        }
        for (a, b) in self.total.iter_mut().zip(&other.total) {
            *a += b;
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
    }

    /// Assemble the score: geometric mean of precisions up to `n` with
    /// the brevity penalty.
    pub fn score(&self, n: usize) -> f64 {
        if self.hyp_len == 0 {
            return 0.0;
        }
        let mut log_sum = 0.0;
        for i in 0..n {
            let (m, t) = (self.matched[i], self.total[i]);
            if m == 0 || t == 0 {
                return 0.0;
            }
            log_sum += (m as f64 / t as f64).ln();
        }
        let bp = if self.hyp_len > self.ref_len {
            1.0
        } else {
            (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp()
        };
        bp * (log_sum / n as f64).exp()
    }
}

fn ngrams(tokens: &[String], n: usize) -> BTreeMap<&[String], usize> {
    let mut out: BTreeMap<&[String], usize> = BTreeMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *out.entry(w).or_default() += 1;
        }
    }
    out
}

/// Per-segment counts for orders `1..=n`.
pub fn bleu_stats(hyp: &[String], reference: &[String], n: usize) -> Result<BleuStats> {
    if !(1..=2).contains(&n) {
        return Err(MetricsError::UnsupportedOrder(n));
    }
    if reference.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    let mut stats = BleuStats {
        matched: vec![0; n],
        total: vec![0; n],
        hyp_len: hyp.len(),
        ref_len: reference.len(),
    };
    for order in 1..=n {
        let h = ngrams(hyp, order);
        let r = ngrams(reference, order);
        for (gram, count) in &h {
            stats.total[order - 1] += count;
            stats.matched[order - 1] += (*count).min(r.get(gram).copied().unwrap_or(0));
        }
    }
    Ok(stats)
}

/// Segment-level BLEU-n.
pub fn bleu(hyp: &[String], reference: &[String], n: usize) -> Result<f64> {
    Ok(bleu_stats(hyp, reference, n)?.score(n))
}

/// Corpus-level BLEU-n over (hypothesis, reference) pairs.
pub fn corpus_bleu(pairs: &[(Vec<String>, Vec<String>)], n: usize) -> Result<f64> {
    let mut agg = BleuStats {
        matched: vec![0; n],
        total: vec![0; n],
        hyp_len: 0,
        ref_len: 0,
    };
    for (h, r) in pairs {
        agg.accumulate(&bleu_stats(h, r, n)?);
    }
    Ok(agg.score(n))
}
