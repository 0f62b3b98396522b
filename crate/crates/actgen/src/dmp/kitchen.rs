//! Kinematic kitchen simulator. Objects are poses with containment
//! flags; the gripper carries whatever it holds, pose-locked, through
//! every integration step.

use super::library::{DmpLibrary, Effect, Target, TaskSpec};
use super::primitive::{rollout, Trajectory};
use super::{DmpError, Result};
use crate::data::ActionSequence;
use crate::decode::TaskKnowledge;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

pub const GRASP_TOL: f64 = 0.08;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub pos: [f64; 3],
    pub yaw: f64,
}

impl Pose {
    pub fn at(x: f64, y: f64, z: f64) -> Self {
        Pose {
            pos: [x, y, z],
            yaw: 0.0,
        }
    }

    pub fn dist(&self, other: &Pose) -> f64 {
        self.pos
            .iter()
            .zip(&other.pos)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KitchenState {
    pub objects: BTreeMap<String, Pose>,
    pub regions: BTreeMap<String, Pose>,
    pub gripper: Pose,
    pub gripper_open: bool,
    pub held: Option<String>,
    /// Objects currently on the workbench; feeds decoding task knowledge.
    pub bench: BTreeSet<String>,
    /// Container name -> names of things poured or placed into it.
    pub contents: BTreeMap<String, BTreeSet<String>>,
}

impl KitchenState {
    pub fn new(gripper_home: Pose) -> Self {
        KitchenState {
            objects: BTreeMap::new(),
            regions: BTreeMap::new(),
            gripper: gripper_home,
            gripper_open: true,
            held: None,
            bench: BTreeSet::new(),
            contents: BTreeMap::new(),
        }
    }

    pub fn with_object(mut self, name: &str, pose: Pose) -> Self {
        self.objects.insert(name.to_string(), pose);
        self.bench.insert(name.to_string());
        self
    }

    pub fn with_region(mut self, name: &str, pose: Pose) -> Self {
        self.regions.insert(name.to_string(), pose);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let poses: Vec<&Pose> = self.objects.values().collect();
        for i in 0..poses.len() {
            for j in i + 1..poses.len() {
                if poses[i].dist(poses[j]) == 0.0 {
                    return Err(DmpError::Config(
                        "two objects share an identical pose".into(),
                    ));
                }
            }
        }
        if let Some(h) = &self.held {
            if !self.objects.contains_key(h) {
                return Err(DmpError::Config(format!("held object `{h}` unknown")));
            }
        }
        Ok(())
    }

    /// Move the gripper; a held object stays pose-locked to it.
    pub fn move_gripper_to(&mut self, pos: [f64; 3]) {
        self.gripper.pos = pos;
        if let Some(h) = &self.held {
            if let Some(p) = self.objects.get_mut(h) {
                p.pos = pos;
            }
        }
    }

    pub fn grasp(&mut self, object: &str) -> Result<()> {
        if self.held.is_some() {
            return Err(DmpError::Config("gripper already holds an object".into()));
        }
        let pose = self
            .objects
            .get(object)
            .ok_or_else(|| DmpError::Config(format!("unknown object `{object}`")))?;
        if pose.dist(&self.gripper) > GRASP_TOL {
            return Err(DmpError::Config(format!(
                "gripper is {:.3} m away from `{object}`, grasp tolerance is {GRASP_TOL}",
                pose.dist(&self.gripper)
            )));
        }
        self.gripper_open = false;
        self.held = Some(object.to_string());
        Ok(())
    }

    pub fn release(&mut self) {
        self.gripper_open = true;
        self.held = None;
    }

    /// Pour the held object's contents into a container: the container
    /// gains the held item's substance; the object stays in hand.
    pub fn pour_into(&mut self, container: &str) -> Result<()> {
        let held = self
            .held
            .clone()
            .ok_or_else(|| DmpError::Config("nothing held to pour".into()))?;
        if !self.objects.contains_key(container) {
            return Err(DmpError::Config(format!("unknown container `{container}`")));
        }
        self.contents
            .entry(container.to_string())
            .or_default()
            .insert(held);
        Ok(())
    }

    pub fn contains(&self, container: &str, item: &str) -> bool {
        self.contents
            .get(container)
            .is_some_and(|set| set.contains(item))
    }

    /// Task knowledge from the bench: exactly the objects present.
    pub fn task_knowledge(&self) -> TaskKnowledge {
        TaskKnowledge::from_bench(self.bench.iter().cloned())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum HaltReason {
    /// No library entry covers this (verb, noun-set) step.
    Coverage { verb: String, nouns: Vec<String> },
    /// A step names an object that is not on the bench.
    Grounding { object: String },
    /// The integrator diverged.
    Integration(String),
}

#[derive(Clone, Debug)]
pub struct ExecutionReport {
    pub success: bool,
    pub final_state: KitchenState,
    pub log: Vec<String>,
    pub halted: Option<HaltReason>,
    /// One (primitive name, gripper trajectory) pair per executed call.
    pub trajectories: Vec<(String, Trajectory)>,
}

fn resolve(state: &KitchenState, target: &Target) -> Result<[f64; 3]> {
    let obj = |name: &str| -> Result<[f64; 3]> {
        state
            .objects
            .get(name)
            .map(|p| p.pos)
            .ok_or_else(|| DmpError::Config(format!("unknown object `{name}`")))
    };
    let region = |name: &str| -> Result<[f64; 3]> {
        state
            .regions
            .get(name)
            .map(|p| p.pos)
            .ok_or_else(|| DmpError::Config(format!("unknown region `{name}`")))
    };
    Ok(match target {
        Target::Object(name) => obj(name)?,
        Target::Region(name) => region(name)?,
        Target::AboveObject(name, dz) => {
            let mut p = obj(name)?;
            p[2] += dz;
            p
        }
        Target::AboveRegion(name, dz) => {
            let mut p = region(name)?;
            p[2] += dz;
            p
        }
        Target::Home => region("home")?,
    })
}

/// Execute a decoded action sequence against the library in the given
/// kitchen. Each step is looked up by (verb, noun set); a missing entry
/// halts with a coverage error, an off-bench object halts with a
/// grounding error before any state change for that step. Success means
/// the task's end-state predicate holds afterwards.
pub fn align_and_execute(
    actions: &ActionSequence,
    library: &DmpLibrary,
    initial: &KitchenState,
    task: &TaskSpec,
    dt: f64,
) -> Result<ExecutionReport> {
    initial.validate()?;
    let mut state = initial.clone();
    let mut log = Vec::new();
    let mut halted = None;
    let mut trajectories = Vec::new();

    'steps: for step in actions.steps() {
        let Some(entry) = library.lookup(&step.verb, &step.nouns) else {
            log.push(format!("step `{step}`: no library entry covers it, halting"));
            halted = Some(HaltReason::Coverage {
                verb: step.verb.clone(),
                nouns: step.nouns.clone(),
            });
            break 'steps;
        };
        // grounding: every named object must be on the bench
        for noun in &step.nouns {
            if !state.bench.contains(noun) {
                log.push(format!(
                    "step `{step}`: object `{noun}` is not on the bench, halting"
                ));
                halted = Some(HaltReason::Grounding {
                    object: noun.clone(),
                });
                break 'steps;
            }
        }
        log.push(format!("step `{step}`: {} primitive(s)", entry.calls.len()));

        // steps apply atomically: work on a scratch state, commit at the end
        let mut scratch = state.clone();
        for call in &entry.calls {
            let dmp = library.primitives.get(&call.dmp).ok_or_else(|| {
                DmpError::Config(format!("library references unknown primitive `{}`", call.dmp))
            })?;
            let goal = resolve(&scratch, &call.goal)?;
            let start = scratch.gripper.pos;
            let horizon = 3.0 * dmp.tau;
            let traj = match rollout(dmp, &start, &goal, dt, horizon) {
                Ok(t) => t,
                Err(DmpError::Integration(msg)) => {
                    log.push(format!("primitive `{}` diverged: {msg}", call.dmp));
                    halted = Some(HaltReason::Integration(msg));
                    break 'steps;
                }
                Err(e) => return Err(e),
            };
            for y in &traj.y {
                scratch.move_gripper_to([y[0], y[1], y[2]]);
            }
            log.push(format!(
                "  {} -> [{:.2}, {:.2}, {:.2}]",
                call.dmp, goal[0], goal[1], goal[2]
            ));
            trajectories.push((call.dmp.clone(), traj));
            for effect in &call.effects {
                match effect {
                    Effect::Grasp(obj) => {
                        scratch.grasp(obj)?;
                        log.push(format!("  grasp {obj}"));
                    }
                    Effect::Release => {
                        scratch.release();
                        log.push("  release".to_string());
                    }
                    Effect::PourInto(container) => {
                        scratch.pour_into(container)?;
                        log.push(format!("  pour into {container}"));
                    }
                    Effect::ReturnAndRelease => {
                        if let Some(held) = scratch.held.clone() {
                            let home = initial
                                .objects
                                .get(&held)
                                .map(|p| p.pos)
                                .unwrap_or(scratch.gripper.pos);
                            scratch.move_gripper_to(home);
                            scratch.release();
                            log.push(format!("  return {held} and release"));
                        }
                    }
                }
            }
        }
        state = scratch;
    }

    let success = halted.is_none() && task.end_state.iter().all(|c| c.holds(&state));
    log.push(format!(
        "task `{}`: {}",
        task.name,
        if success { "success" } else { "failure" }
    ));
    Ok(ExecutionReport {
        success,
        final_state: state,
        log,
        halted,
        trajectories,
    })
}
