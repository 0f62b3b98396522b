//! Word error, action error, and task success.

use super::{MetricsError, Result};
use crate::data::ActionSequence;

/// Token-level edit distance.
pub fn levenshtein(a: &[String], b: &[String]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ta) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, tb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ta != tb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Order-respecting step alignment: the number of reference steps that
/// can be matched, in order, by predicted steps with the same verb and
/// noun set (longest common subsequence under step equality).
pub fn action_alignment(hyp: &ActionSequence, reference: &ActionSequence) -> usize {
    let h = hyp.steps();
    let r = reference.steps();
    let mut dp = vec![vec![0usize; r.len() + 1]; h.len() + 1];
    for i in 0..h.len() {
        for j in 0..r.len() {
            dp[i + 1][j + 1] = if h[i].matches(&r[j]) {
                dp[i][j] + 1
            } else {
                dp[i][j + 1].max(dp[i + 1][j])
            };
        }
    }
    dp[h.len()][r.len()]
}

/// (word error %, action error %) of a predicted action sequence against
/// its reference. Word error is edit distance over the flat token
/// serialization; action error is the fraction of reference steps left
/// unmatched by the order-respecting alignment.
pub fn error_rates(hyp: &ActionSequence, reference: &ActionSequence) -> Result<(f64, f64)> {
    if reference.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    let h_tokens = hyp.token_strings();
    let r_tokens = reference.token_strings();
    let word_error = 100.0 * levenshtein(&h_tokens, &r_tokens) as f64 / r_tokens.len() as f64;
    let matched = action_alignment(hyp, reference);
    let action_error = 100.0 * (1.0 - matched as f64 / reference.steps().len() as f64);
    Ok((word_error, action_error))
}

/// Fraction of clips whose reference steps are all predicted exactly.
/// `clips` holds, per clip, the (predicted, reference) sequences of its
/// segments.
pub fn task_success(clips: &[Vec<(&ActionSequence, &ActionSequence)>]) -> Result<f64> {
    if clips.is_empty() {
        return Ok(0.0);
    }
    let mut successes = 0;
    for clip in clips {
        let all_matched = clip.iter().all(|(hyp, reference)| {
            action_alignment(hyp, reference) == reference.steps().len()
        });
        if all_matched && !clip.is_empty() {
            successes += 1;
        }
    }
    Ok(100.0 * successes as f64 / clips.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ActionStep;

    fn seq(steps: &[(&str, &[&str])]) -> ActionSequence {
        ActionSequence(steps.iter().map(|(v, ns)| ActionStep::new(v, ns)).collect())
    }

    #[test]
    fn identical_sequences_have_zero_error() {
        let s = seq(&[("take", &["celery"]), ("wash", &["celery"])]);
        assert_eq!(error_rates(&s, &s).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn empty_hypothesis_is_total_error() {
        let r = seq(&[("take", &["celery"]), ("wash", &["celery"])]);
        let (we, ae) = error_rates(&ActionSequence::default(), &r).unwrap();
        assert_eq!(we, 100.0);
        assert_eq!(ae, 100.0);
    }

    #[test]
    fn one_missed_step_of_four_is_25_percent() {
        let r = seq(&[
            ("turn-on", &["tap"]),
            ("take", &["celery"]),
            ("wash", &["celery"]),
            ("turn-off", &["tap"]),
        ]);
        let h = seq(&[
            ("turn-on", &["tap"]),
            ("take", &["celery"]),
            ("turn-off", &["tap"]),
        ]);
        let (_, ae) = error_rates(&h, &r).unwrap();
        assert!((ae - 25.0).abs() < 1e-12);
    }

    #[test]
    fn alignment_respects_order() {
        let r = seq(&[("take", &["celery"]), ("wash", &["celery"])]);
        let reversed = seq(&[("wash", &["celery"]), ("take", &["celery"])]);
        // only one step can align once order is enforced
        assert_eq!(action_alignment(&reversed, &r), 1);
        let (_, ae) = error_rates(&reversed, &r).unwrap();
        assert!((ae - 50.0).abs() < 1e-12);
    }

    #[test]
    fn noun_order_within_a_step_does_not_matter() {
        let r = seq(&[("pour", &["milk", "bowl"])]);
        let h = seq(&[("pour", &["bowl", "milk"])]);
        assert_eq!(action_alignment(&h, &r), 1);
    }

    #[test]
    fn all_clips_perfect_is_100() {
        let s = seq(&[("take", &["celery"])]);
        let clips = vec![vec![(&s, &s)], vec![(&s, &s)]];
        assert_eq!(task_success(&clips).unwrap(), 100.0);
    }

    #[test]
    fn one_wrong_noun_in_one_of_four_clips_is_75() {
        let good = seq(&[("pour", &["milk"])]);
        let bad = seq(&[("pour", &["coffee"])]);
        let clips = vec![
            vec![(&good, &good)],
            vec![(&good, &good)],
            vec![(&good, &good)],
            vec![(&bad, &good)],
        ];
        assert_eq!(task_success(&clips).unwrap(), 75.0);
    }
}
