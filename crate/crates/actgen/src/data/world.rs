//! Kitchen-world specification: the closed verb/noun inventories, the
//! step grammar, and the caption templates the generator draws from.

use super::{DataError, Result, Vocab};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Grammar entry for one verb. `patterns` lists the legal slot layouts
/// (each slot is the set of nouns allowed there); `templates` maps a
/// pattern arity to caption tokens, with `{0}`, `{1}` noun placeholders.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerbSpec {
    pub name: String,
    pub patterns: Vec<Vec<Vec<String>>>,
    pub templates: BTreeMap<usize, Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldSpec {
    pub verbs: Vec<VerbSpec>,
    pub nouns: Vec<String>,
    pub subtitle_fillers: Vec<String>,
    pub step_connector: String,
    pub max_steps_per_segment: usize,
    pub frames_per_step: usize,
    pub noise_scale: f64,
    pub embedding_seed: u64,
}

impl WorldSpec {
    pub fn validate(&self) -> Result<()> {
        if self.verbs.is_empty() || self.nouns.is_empty() {
            return Err(DataError::Config(
                "world requires non-empty verb and noun inventories".into(),
            ));
        }
        for v in &self.verbs {
            if v.patterns.is_empty() {
                return Err(DataError::Config(format!("verb `{}` has no patterns", v.name)));
            }
            for p in &v.patterns {
                if !v.templates.contains_key(&p.len()) {
                    return Err(DataError::Config(format!(
                        "verb `{}` lacks a caption template for arity {}",
                        v.name,
                        p.len()
                    )));
                }
                for slot in p {
                    if slot.is_empty() {
                        return Err(DataError::Config(format!(
                            "verb `{}` has an empty noun slot",
                            v.name
                        )));
                    }
                    for n in slot {
                        if !self.nouns.contains(n) {
                            return Err(DataError::UnknownClass(n.clone()));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Token vocabulary implied by the world: every template word, noun
    /// surface form, connector and filler becomes a caption word; verbs
    /// and nouns form the action vocabulary.
    pub fn vocab(&self) -> Vocab {
        let mut words: Vec<String> = Vec::new();
        for v in &self.verbs {
            for tmpl in v.templates.values() {
                for tok in tmpl {
                    if !tok.starts_with('{') {
                        words.push(tok.clone());
                    }
                }
            }
        }
        words.extend(self.nouns.iter().cloned());
        words.push(self.step_connector.clone());
        words.extend(self.subtitle_fillers.iter().cloned());
        words.sort();
        words.dedup();
        Vocab {
            words,
            verbs: self.verbs.iter().map(|v| v.name.clone()).collect(),
            nouns: self.nouns.clone(),
        }
    }

    pub fn verb(&self, name: &str) -> Option<&VerbSpec> {
        self.verbs.iter().find(|v| v.name == name)
    }
}

fn verb(name: &str, patterns: &[&[&[&str]]], templates: &[(usize, &str)]) -> VerbSpec {
    VerbSpec {
        name: name.to_string(),
        patterns: patterns
            .iter()
            .map(|p| {
                p.iter()
                    .map(|slot| slot.iter().map(|s| s.to_string()).collect())
                    .collect()
            })
            .collect(),
        templates: templates
            .iter()
            .map(|(k, t)| (*k, t.split_whitespace().map(|s| s.to_string()).collect()))
            .collect(),
    }
}

/// The stock desk-scale kitchen world: 9 verbs, 16 nouns, and caption
/// templates that make caption and action renderings of a segment carry
/// the same semantic content.
pub fn default_world() -> WorldSpec {
    const MOVABLE: &[&str] = &[
        "celery", "bowl", "cereal", "milk", "cup", "coffee", "knife", "tomato", "plate", "spoon",
        "tray", "orange-juice", "strawberry-juice",
    ];
    const WASHABLE: &[&str] = &["celery", "tomato", "bowl", "cup", "plate", "spoon", "pan", "knife"];
    const CUTTABLE: &[&str] = &["celery", "tomato"];
    const POURABLE: &[&str] = &["cereal", "milk", "coffee", "orange-juice", "strawberry-juice"];
    const CONTAINER: &[&str] = &["bowl", "cup", "pan"];
    const PLACEABLE: &[&str] = &[
        "bowl", "cup", "plate", "pan", "orange-juice", "strawberry-juice",
    ];
    const SURFACE: &[&str] = &["tray", "plate"];
    const SWITCHABLE: &[&str] = &["tap", "fridge"];
    const STIRRABLE: &[&str] = &["bowl", "cup", "pan"];

    let verbs = vec![
        verb(
            "take",
            &[&[MOVABLE]],
            &[(1, "the person takes the {0}")],
        ),
        verb(
            "wash",
            &[&[WASHABLE]],
            &[(1, "the person washes the {0} in the sink")],
        ),
        verb(
            "cut",
            &[&[CUTTABLE]],
            &[(1, "the person cuts the {0} with a knife")],
        ),
        verb(
            "pour",
            &[&[POURABLE], &[POURABLE, CONTAINER]],
            &[
                (1, "the person pours the {0}"),
                (2, "the person pours the {0} into the {1}"),
            ],
        ),
        verb(
            "place",
            &[&[PLACEABLE], &[PLACEABLE, SURFACE]],
            &[
                (1, "the person places the {0} on the counter"),
                (2, "the person places the {0} on the {1}"),
            ],
        ),
        verb(
            "turn-on",
            &[&[SWITCHABLE]],
            &[(1, "the person turns on the {0}")],
        ),
        verb(
            "turn-off",
            &[&[SWITCHABLE]],
            &[(1, "the person turns off the {0}")],
        ),
        verb(
            "stir",
            &[&[STIRRABLE]],
            &[(1, "the person stirs the {0} with a spoon")],
        ),
        verb("open", &[&[&["fridge"]]], &[(1, "the person opens the {0}")]),
    ];

    WorldSpec {
        verbs,
        nouns: [
            "tap", "celery", "pan", "bowl", "cereal", "milk", "cup", "coffee", "knife", "tomato",
            "plate", "spoon", "tray", "orange-juice", "strawberry-juice", "fridge",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
        subtitle_fillers: ["um", "okay", "so", "now", "just"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        step_connector: "then".to_string(),
        max_steps_per_segment: 3,
        frames_per_step: 2,
        noise_scale: 0.3,
        embedding_seed: 1234,
    }
}
