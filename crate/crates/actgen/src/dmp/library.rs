//! Primitive library and task specifications. Action labels are
//! coarser than primitives, so one (verb, noun-set) entry expands to an
//! ordered list of primitive calls, e.g. place bowl pick-then-place.

use super::kitchen::{KitchenState, Pose};
use super::primitive::{fit_dmp, min_jerk_demo, DmpPrimitive, Trajectory};
use super::{DmpError, Result};
use crate::data::Vocab;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub const LIBRARY_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Target {
    Object(String),
    Region(String),
    AboveObject(String, f64),
    AboveRegion(String, f64),
    Home,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Effect {
    Grasp(String),
    Release,
    PourInto(String),
    /// Carry the held object back to its original pose and let go.
    ReturnAndRelease,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveCall {
    pub dmp: String,
    pub goal: Target,
    pub effects: Vec<Effect>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LibraryEntry {
    pub verb: String,
    pub nouns: Vec<String>,
    pub calls: Vec<PrimitiveCall>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DmpLibrary {
    pub version: u32,
    pub primitives: BTreeMap<String, DmpPrimitive>,
    pub entries: Vec<LibraryEntry>,
}

impl DmpLibrary {
    /// Entry whose verb and noun multiset match the step.
    pub fn lookup(&self, verb: &str, nouns: &[String]) -> Option<&LibraryEntry> {
        let mut key: Vec<&String> = nouns.iter().collect();
        key.sort();
        self.entries.iter().find(|e| {
            if e.verb != verb || e.nouns.len() != nouns.len() {
                return false;
            }
            let mut others: Vec<&String> = e.nouns.iter().collect();
            others.sort();
            others == key
        })
    }

    /// Structural checks plus (optionally) vocabulary membership of
    /// every entry's verb and nouns.
    pub fn validate(&self, vocab: Option<&Vocab>) -> Result<()> {
        if self.version != LIBRARY_VERSION {
            return Err(DmpError::Config(format!(
                "unsupported library version {}",
                self.version
            )));
        }
        for p in self.primitives.values() {
            p.validate()?;
        }
        for e in &self.entries {
            if e.calls.is_empty() {
                return Err(DmpError::Config(format!(
                    "entry ({}, {:?}) has no primitive calls",
                    e.verb, e.nouns
                )));
            }
            for c in &e.calls {
                if !self.primitives.contains_key(&c.dmp) {
                    return Err(DmpError::Config(format!(
                        "entry ({}, {:?}) references unknown primitive `{}`",
                        e.verb, e.nouns, c.dmp
                    )));
                }
            }
            if let Some(v) = vocab {
                if !v.verbs.contains(&e.verb) {
                    return Err(DmpError::Config(format!(
                        "library verb `{}` is not in the action vocabulary",
                        e.verb
                    )));
                }
                for n in &e.nouns {
                    if !v.nouns.contains(n) {
                        return Err(DmpError::Config(format!(
                            "library noun `{n}` is not in the action vocabulary"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| DmpError::Config(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let lib: DmpLibrary =
            serde_json::from_str(&text).map_err(|e| DmpError::Config(e.to_string()))?;
        lib.validate(None)?;
        Ok(lib)
    }
}

/// End-state predicate atoms; a task succeeds when all hold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Condition {
    Contains { container: String, item: String },
    /// Object within `tol` (xy) of another object or a named region.
    Near { object: String, target: String, tol: f64 },
    GripperEmpty,
}

impl Condition {
    pub fn holds(&self, state: &KitchenState) -> bool {
        match self {
            Condition::Contains { container, item } => state.contains(container, item),
            Condition::Near {
                object,
                target,
                tol,
            } => {
                let Some(obj) = state.objects.get(object) else {
                    return false;
                };
                let tgt = state
                    .objects
                    .get(target)
                    .or_else(|| state.regions.get(target));
                let Some(tgt) = tgt else { return false };
                let dx = obj.pos[0] - tgt.pos[0];
                let dy = obj.pos[1] - tgt.pos[1];
                (dx * dx + dy * dy).sqrt() <= *tol
            }
            Condition::GripperEmpty => state.held.is_none(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub version: u32,
    pub name: String,
    pub subtasks: crate::data::ActionSequence,
    pub end_state: Vec<Condition>,
}

impl TaskSpec {
    pub fn validate(&self) -> Result<()> {
        if self.subtasks.is_empty() {
            return Err(DmpError::Config(format!(
                "task `{}` has no subtasks",
                self.name
            )));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| DmpError::Config(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let spec: TaskSpec =
            serde_json::from_str(&text).map_err(|e| DmpError::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Demonstration with a vertical detour: rise above both endpoints, then
/// settle on the goal from above. The shape all pick/place variants share.
fn arc_demo(y0: &[f64; 3], g: &[f64; 3], lift: f64, tau: f64) -> Trajectory {
    let samples = 121;
    let base = min_jerk_demo(y0, g, tau, samples);
    let mut demo = base.clone();
    for k in 0..samples {
        let s = demo.t[k] / tau;
        let bump = (std::f64::consts::PI * s).sin().powi(2) * lift;
        // analytic derivatives of the bump keep the fit targets exact
        let w = std::f64::consts::PI / tau;
        let db = 2.0 * (std::f64::consts::PI * s).sin() * (std::f64::consts::PI * s).cos() * w * lift;
        let ddb = 2.0 * w * w * lift
            * ((std::f64::consts::PI * s).cos().powi(2) - (std::f64::consts::PI * s).sin().powi(2));
        demo.y[k][2] += bump;
        demo.yd[k][2] += db;
        demo.ydd[k][2] += ddb;
    }
    demo
}

const ALPHA_Z: f64 = 25.0;
const BETA_Z: f64 = ALPHA_Z / 4.0;
const N_BASIS: usize = 20;

fn fitted(name: &str, lift: f64, tau: f64) -> DmpPrimitive {
    let demo = arc_demo(&[0.0, 0.0, 0.2], &[0.4, 0.3, 0.0], lift, tau);
    fit_dmp(&demo, name, ALPHA_Z, BETA_Z, N_BASIS).expect("stock demo fits")
}

/// The shipped primitive library: four arc-shaped primitives fitted from
/// synthetic joystick-style demonstrations, plus entries covering the
/// three stock kitchen tasks.
pub fn builtin_library() -> DmpLibrary {
    let mut primitives = BTreeMap::new();
    for (name, lift, tau) in [
        ("top-down-pick", 0.25, 1.0),
        ("top-down-place", 0.25, 1.0),
        ("pick-and-pour", 0.35, 1.2),
        ("side-place", 0.10, 1.0),
    ] {
        primitives.insert(name.to_string(), fitted(name, lift, tau));
    }

    let pick = |obj: &str| PrimitiveCall {
        dmp: "top-down-pick".into(),
        goal: Target::Object(obj.into()),
        effects: vec![Effect::Grasp(obj.into())],
    };
    let place_at_region = |region: &str| PrimitiveCall {
        dmp: "top-down-place".into(),
        goal: Target::Region(region.into()),
        effects: vec![Effect::Release],
    };
    let pour_into = |container: &str| PrimitiveCall {
        dmp: "pick-and-pour".into(),
        goal: Target::AboveObject(container.into(), 0.2),
        effects: vec![Effect::PourInto(container.into()), Effect::ReturnAndRelease],
    };
    let place_on_object = |support: &str| PrimitiveCall {
        dmp: "side-place".into(),
        goal: Target::AboveObject(support.into(), 0.05),
        effects: vec![Effect::Release],
    };

    let entry = |verb: &str, nouns: &[&str], calls: Vec<PrimitiveCall>| LibraryEntry {
        verb: verb.into(),
        nouns: nouns.iter().map(|s| s.to_string()).collect(),
        calls,
    };

    let entries = vec![
        // make a bowl of cereal
        entry("place", &["bowl"], vec![pick("bowl"), place_at_region("bowl-spot")]),
        entry("pour", &["cereal"], vec![pick("cereal"), pour_into("bowl")]),
        entry("pour", &["milk"], vec![pick("milk"), pour_into("bowl")]),
        // make a cup of coffee
        entry("pour", &["coffee", "cup"], vec![pick("coffee"), pour_into("cup")]),
        entry("pour", &["milk", "cup"], vec![pick("milk"), pour_into("cup")]),
        // prepare drinks for serving
        entry(
            "place",
            &["orange-juice", "tray"],
            vec![pick("orange-juice"), place_on_object("tray")],
        ),
        entry(
            "place",
            &["strawberry-juice", "tray"],
            vec![pick("strawberry-juice"), place_on_object("tray")],
        ),
    ];

    DmpLibrary {
        version: LIBRARY_VERSION,
        primitives,
        entries,
    }
}

/// Stock tasks with their initial scenes. `name` is one of
/// `cereal`, `coffee`, `drinks`.
pub fn builtin_task(name: &str) -> Option<(TaskSpec, KitchenState)> {
    use crate::data::{ActionSequence, ActionStep};
    let base = |objects: &[(&str, f64, f64)]| {
        let mut st = KitchenState::new(Pose::at(0.2, 0.0, 0.3))
            .with_region("home", Pose::at(0.2, 0.0, 0.3))
            .with_region("bowl-spot", Pose::at(0.45, 0.0, 0.0));
        for (obj, x, y) in objects {
            st = st.with_object(obj, Pose::at(*x, *y, 0.0));
        }
        st
    };
    match name {
        "cereal" => Some((
            TaskSpec {
                version: LIBRARY_VERSION,
                name: "cereal".into(),
                subtasks: ActionSequence(vec![
                    ActionStep::new("place", &["bowl"]),
                    ActionStep::new("pour", &["cereal"]),
                    ActionStep::new("pour", &["milk"]),
                ]),
                end_state: vec![
                    Condition::Near {
                        object: "bowl".into(),
                        target: "bowl-spot".into(),
                        tol: 0.1,
                    },
                    Condition::Contains {
                        container: "bowl".into(),
                        item: "cereal".into(),
                    },
                    Condition::Contains {
                        container: "bowl".into(),
                        item: "milk".into(),
                    },
                    Condition::GripperEmpty,
                ],
            },
            base(&[("bowl", 0.4, -0.3), ("cereal", 0.55, 0.25), ("milk", 0.62, -0.12)]),
        )),
        "coffee" => Some((
            TaskSpec {
                version: LIBRARY_VERSION,
                name: "coffee".into(),
                subtasks: ActionSequence(vec![
                    ActionStep::new("pour", &["coffee", "cup"]),
                    ActionStep::new("pour", &["milk", "cup"]),
                ]),
                end_state: vec![
                    Condition::Contains {
                        container: "cup".into(),
                        item: "coffee".into(),
                    },
                    Condition::Contains {
                        container: "cup".into(),
                        item: "milk".into(),
                    },
                    Condition::GripperEmpty,
                ],
            },
            base(&[("cup", 0.45, 0.05), ("coffee", 0.58, 0.3), ("milk", 0.62, -0.15)]),
        )),
        "drinks" => Some((
            TaskSpec {
                version: LIBRARY_VERSION,
                name: "drinks".into(),
                subtasks: ActionSequence(vec![
                    ActionStep::new("place", &["orange-juice", "tray"]),
                    ActionStep::new("place", &["strawberry-juice", "tray"]),
                ]),
                end_state: vec![
                    Condition::Near {
                        object: "orange-juice".into(),
                        target: "tray".into(),
                        tol: 0.1,
                    },
                    Condition::Near {
                        object: "strawberry-juice".into(),
                        target: "tray".into(),
                        tol: 0.1,
                    },
                    Condition::GripperEmpty,
                ],
            },
            base(&[
                ("tray", 0.5, 0.0),
                ("orange-juice", 0.35, 0.3),
                ("strawberry-juice", 0.35, -0.3),
            ]),
        )),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::super::align_and_execute;
    use super::*;
    use crate::data::{default_world, ActionSequence, ActionStep};

    #[test]
    fn builtin_library_validates_against_world_vocabulary() {
        let vocab = default_world().vocab();
        builtin_library().validate(Some(&vocab)).unwrap();
    }

    #[test]
    fn cereal_task_executes_to_success() {
        let lib = builtin_library();
        let (task, scene) = builtin_task("cereal").unwrap();
        let report = align_and_execute(&task.subtasks, &lib, &scene, &task, 0.01).unwrap();
        assert!(report.success, "log:\n{}", report.log.join("\n"));
        assert!(report.final_state.contains("bowl", "cereal"));
        assert!(report.final_state.contains("bowl", "milk"));
        assert!(report.halted.is_none());
        // one trajectory per primitive call: 2 + 2 + 2
        assert_eq!(report.trajectories.len(), 6);
    }

    #[test]
    fn coffee_and_drinks_tasks_execute_to_success() {
        let lib = builtin_library();
        for name in ["coffee", "drinks"] {
            let (task, scene) = builtin_task(name).unwrap();
            let report = align_and_execute(&task.subtasks, &lib, &scene, &task, 0.01).unwrap();
            assert!(report.success, "{name} log:\n{}", report.log.join("\n"));
        }
    }

    #[test]
    fn off_bench_object_halts_with_grounding_error_and_no_state_change() {
        let lib = builtin_library();
        let (task, mut scene) = builtin_task("cereal").unwrap();
        scene.bench.remove("milk");
        scene.objects.remove("milk");
        let actions = ActionSequence(vec![ActionStep::new("pour", &["milk"])]);
        let report = align_and_execute(&actions, &lib, &scene, &task, 0.01).unwrap();
        assert!(!report.success);
        assert!(matches!(
            report.halted,
            Some(super::super::HaltReason::Grounding { ref object }) if object == "milk"
        ));
        assert_eq!(report.final_state.gripper, scene.gripper);
        assert_eq!(report.final_state.contents, scene.contents);
    }

    #[test]
    fn uncovered_step_halts_with_coverage_error() {
        let lib = builtin_library();
        let (task, scene) = builtin_task("cereal").unwrap();
        let actions = ActionSequence(vec![ActionStep::new("wash", &["bowl"])]);
        let report = align_and_execute(&actions, &lib, &scene, &task, 0.01).unwrap();
        assert!(!report.success);
        assert!(matches!(
            report.halted,
            Some(super::super::HaltReason::Coverage { .. })
        ));
        assert!(report.log.iter().any(|l| l.contains("no library entry")));
    }

    #[test]
    fn one_wrong_step_fails_the_task() {
        let lib = builtin_library();
        let (task, scene) = builtin_task("cereal").unwrap();
        // milk never gets poured
        let actions = ActionSequence(vec![
            ActionStep::new("place", &["bowl"]),
            ActionStep::new("pour", &["cereal"]),
            ActionStep::new("pour", &["cereal"]),
        ]);
        let report = align_and_execute(&actions, &lib, &scene, &task, 0.01).unwrap();
        assert!(!report.success);
        assert!(report.halted.is_none(), "all steps are covered and grounded");
    }

    #[test]
    fn execution_is_deterministic() {
        let lib = builtin_library();
        let (task, scene) = builtin_task("cereal").unwrap();
        let a = align_and_execute(&task.subtasks, &lib, &scene, &task, 0.01).unwrap();
        let b = align_and_execute(&task.subtasks, &lib, &scene, &task, 0.01).unwrap();
        assert_eq!(a.final_state, b.final_state);
        assert_eq!(a.log, b.log);
    }

    #[test]
    fn held_object_tracks_gripper_through_moves() {
        let (_, mut scene) = builtin_task("cereal").unwrap();
        scene.gripper = scene.objects["bowl"];
        scene.grasp("bowl").unwrap();
        for pos in [[0.1, 0.2, 0.3], [0.5, -0.2, 0.1], [0.0, 0.0, 0.0]] {
            scene.move_gripper_to(pos);
            assert_eq!(scene.objects["bowl"].pos, pos);
            assert_eq!(scene.gripper.pos, pos);
        }
    }

    #[test]
    fn library_and_task_files_round_trip() {
        let dir = std::env::temp_dir().join(format!("actgen-dmp-{}", std::process::id()));
        let lib = builtin_library();
        let lib_path = dir.join("library.json");
        lib.save(&lib_path).unwrap();
        let loaded = DmpLibrary::load(&lib_path).unwrap();
        assert_eq!(lib, loaded);
        let (task, _) = builtin_task("drinks").unwrap();
        let task_path = dir.join("task.json");
        task.save(&task_path).unwrap();
        assert_eq!(task, TaskSpec::load(&task_path).unwrap());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn task_knowledge_mirrors_the_bench() {
        let (_, scene) = builtin_task("cereal").unwrap();
        let tk = scene.task_knowledge();
        assert!(tk.allowed_nouns.contains("bowl"));
        assert!(tk.allowed_nouns.contains("cereal"));
        assert!(!tk.allowed_nouns.contains("celery"));
    }
}
