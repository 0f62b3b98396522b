//! Grouping decoded action tokens back into steps: a verb token opens a
//! step, following noun tokens attach to it.

use crate::data::{ActionSequence, ActionStep, Vocab, SPECIALS};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DetokWarning {
    /// Noun token appeared before any verb token.
    OrphanNoun(String),
}

/// Parse a flat action-head token sequence into steps. Specials are
/// skipped; nouns arriving before the first verb are recorded as
/// warnings and dropped. An empty or specials-only sequence yields an
/// empty `ActionSequence`, which is a normal outcome.
pub fn detokenize_actions(tokens: &[usize], vocab: &Vocab) -> (ActionSequence, Vec<DetokWarning>) {
    let mut steps: Vec<ActionStep> = Vec::new();
    let mut warnings = Vec::new();
    for &t in tokens {
        if t < SPECIALS {
            continue;
        }
        if vocab.is_verb_token(t) {
            steps.push(ActionStep {
                verb: vocab.action_token_name(t).to_string(),
                nouns: Vec::new(),
            });
        } else if vocab.is_noun_token(t) {
            match steps.last_mut() {
                Some(step) => step.nouns.push(vocab.action_token_name(t).to_string()),
                None => warnings.push(DetokWarning::OrphanNoun(
                    vocab.action_token_name(t).to_string(),
                )),
            }
        }
    }
    (ActionSequence(steps), warnings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::default_world;

    #[test]
    fn verb_opens_step_nouns_attach() {
        let vocab = default_world().vocab();
        let tokens = vec![
            vocab.verb_token("turn-on").unwrap(),
            vocab.noun_token("tap").unwrap(),
            vocab.verb_token("take").unwrap(),
            vocab.noun_token("celery").unwrap(),
        ];
        let (seq, warnings) = detokenize_actions(&tokens, &vocab);
        assert!(warnings.is_empty());
        assert_eq!(
            seq.steps(),
            &[
                ActionStep::new("turn-on", &["tap"]),
                ActionStep::new("take", &["celery"]),
            ]
        );
    }

    #[test]
    fn eos_only_is_an_empty_sequence() {
        let vocab = default_world().vocab();
        let (seq, warnings) = detokenize_actions(&[crate::data::EOS], &vocab);
        assert!(seq.is_empty());
        assert!(warnings.is_empty());
    }

    #[test]
    fn leading_noun_is_an_orphan_warning() {
        let vocab = default_world().vocab();
        let tokens = vec![
            vocab.noun_token("celery").unwrap(),
            vocab.verb_token("take").unwrap(),
            vocab.noun_token("tap").unwrap(),
        ];
        let (seq, warnings) = detokenize_actions(&tokens, &vocab);
        assert_eq!(seq.steps(), &[ActionStep::new("take", &["tap"])]);
        assert_eq!(warnings, vec![DetokWarning::OrphanNoun("celery".into())]);
    }

    mod properties {
        use super::*;
        use crate::data::{generate_dataset, GenConfig};

        /// detokenize(serialize(seq)) is the identity on every sequence
        /// the world grammar can produce.
        #[test]
        fn detokenize_inverts_serialization() {
            let world = default_world();
            let vocab = world.vocab();
            let ds = generate_dataset(
                &world,
                &GenConfig {
                    n_videos: 6,
                    segments_per_video: 6,
                    actions_frac: 1.0,
                    seed: 123,
                    ..GenConfig::default()
                },
            )
            .unwrap();
            for r in &ds.records {
                let seq = r.actions.as_ref().unwrap();
                let tokens = seq.to_tokens(&vocab).unwrap();
                let (back, warnings) = detokenize_actions(&tokens, &vocab);
                assert!(warnings.is_empty());
                assert_eq!(&back, seq);
            }
        }
    }
}
