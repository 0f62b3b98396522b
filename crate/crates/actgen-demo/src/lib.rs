//! Browser bindings for the interactive demo page. Three operations,
//! each returning JSON the page renders onto canvases:
//! movement-primitive fitting/retargeting, Gumbel-softmax sampling, and
//! simulated kitchen-task execution.

use actgen::data::{ActionSequence, ActionStep};
use actgen::dmp::{align_and_execute, builtin_library, builtin_task, fit_dmp, rollout, Trajectory};
use actgen::numerics::{Graph, RngState};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct DmpExploreOut {
    demo: Vec<[f64; 4]>,
    replay: Vec<[f64; 4]>,
    retargeted: Vec<[f64; 4]>,
    rmse: f64,
}

fn rows(traj: &Trajectory) -> Vec<[f64; 4]> {
    traj.t
        .iter()
        .zip(&traj.y)
        .map(|(t, y)| [*t, y[0], y[1], y[2]])
        .collect()
}

/// Fit a primitive to an arc-shaped demonstration, replay it, and
/// retarget the same shape to a different goal. `lift` bends the demo's
/// vertical detour; `alpha_z` and `n_basis` expose the fit quality.
#[wasm_bindgen]
pub fn dmp_explore(alpha_z: f64, n_basis: usize, lift: f64, goal_shift: f64) -> String {
    let run = || -> Result<DmpExploreOut, String> {
        if !(1.0..=400.0).contains(&alpha_z) {
            return Err("alpha_z must be in [1, 400]".into());
        }
        let n_basis = n_basis.clamp(2, 60);
        let tau = 1.2;
        let samples = 121;
        let y0 = [0.0, 0.0, 0.2];
        let g = [0.5, 0.35, 0.0];
        // minimum-jerk path with a sinusoidal vertical detour
        let mut demo = Trajectory::default();
        for k in 0..samples {
            let t = tau * k as f64 / (samples - 1) as f64;
            let s = t / tau;
            let p = 10.0 * s.powi(3) - 15.0 * s.powi(4) + 6.0 * s.powi(5);
            let v = (30.0 * s.powi(2) - 60.0 * s.powi(3) + 30.0 * s.powi(4)) / tau;
            let a = (60.0 * s - 180.0 * s.powi(2) + 120.0 * s.powi(3)) / (tau * tau);
            let w = std::f64::consts::PI / tau;
            let bump = (std::f64::consts::PI * s).sin().powi(2) * lift;
            let db = 2.0 * (std::f64::consts::PI * s).sin() * (std::f64::consts::PI * s).cos() * w * lift;
            let ddb = 2.0 * w * w * lift
                * ((std::f64::consts::PI * s).cos().powi(2) - (std::f64::consts::PI * s).sin().powi(2));
            demo.t.push(t);
            demo.y.push(vec![
                y0[0] + (g[0] - y0[0]) * p,
                y0[1] + (g[1] - y0[1]) * p,
                y0[2] + (g[2] - y0[2]) * p + bump,
            ]);
            demo.yd.push(vec![
                (g[0] - y0[0]) * v,
                (g[1] - y0[1]) * v,
                (g[2] - y0[2]) * v + db,
            ]);
            demo.ydd.push(vec![
                (g[0] - y0[0]) * a,
                (g[1] - y0[1]) * a,
                (g[2] - y0[2]) * a + ddb,
            ]);
        }
        let dmp = fit_dmp(&demo, "demo", alpha_z, alpha_z / 4.0, n_basis).map_err(|e| e.to_string())?;
        let replay = rollout(&dmp, &y0, &g, tau / 120.0, tau).map_err(|e| e.to_string())?;
        let g2 = [g[0] + goal_shift, g[1] - goal_shift * 0.6, g[2]];
        let retargeted = rollout(&dmp, &y0, &g2, tau / 120.0, tau).map_err(|e| e.to_string())?;
        let n = demo.len().min(replay.len());
        let mut sq = 0.0;
        for k in 0..n {
            for d in 0..3 {
                let e = demo.y[k][d] - replay.y[k][d];
                sq += e * e;
            }
        }
        Ok(DmpExploreOut {
            demo: rows(&demo),
            replay: rows(&replay),
            retargeted: rows(&retargeted),
            rmse: (sq / (n * 3) as f64).sqrt(),
        })
    };
    to_json(run())
}

#[derive(Serialize)]
struct GumbelOut {
    probs: Vec<f64>,
    mean_soft: Vec<f64>,
    argmax_hist: Vec<f64>,
    first_samples: Vec<Vec<f64>>,
}

/// Draw Gumbel-softmax samples over a small categorical distribution and
/// report the soft-sample mean and hard-argmax histogram; temperature is
/// the parameter worth exploring.
#[wasm_bindgen]
pub fn gumbel_explore(logits_csv: &str, temperature: f64, samples: usize, seed: u64) -> String {
    let run = || -> Result<GumbelOut, String> {
        let logits: Vec<f64> = logits_csv
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        if logits.len() < 2 || logits.len() > 16 {
            return Err("enter 2 to 16 comma-separated logits".into());
        }
        if temperature <= 0.0 {
            return Err("temperature must be positive".into());
        }
        let n = logits.len();
        let samples = samples.clamp(1, 5000);
        let mut probs = logits.clone();
        actgen::numerics::softmax_slice(&mut probs);
        let mut rng = RngState::new(seed);
        let mut mean_soft = vec![0.0; n];
        let mut hist = vec![0.0; n];
        let mut first = Vec::new();
        for i in 0..samples {
            let mut g = Graph::new();
            let l = g.leaf(&[n], logits.clone()).map_err(|e| e.to_string())?;
            let y = g
                .gumbel_softmax_sample(l, temperature, &mut rng)
                .map_err(|e| e.to_string())?;
            let v = g.values(y);
            let mut arg = 0;
            for (j, x) in v.iter().enumerate() {
                mean_soft[j] += x / samples as f64;
                if *x > v[arg] {
                    arg = j;
                }
            }
            hist[arg] += 1.0 / samples as f64;
            if i < 12 {
                first.push(v.to_vec());
            }
        }
        Ok(GumbelOut {
            probs,
            mean_soft,
            argmax_hist: hist,
            first_samples: first,
        })
    };
    to_json(run())
}

#[derive(Serialize)]
struct KitchenOut {
    task: String,
    steps: Vec<String>,
    success: bool,
    log: Vec<String>,
    gripper_path: Vec<[f64; 3]>,
    objects_start: Vec<(String, [f64; 3])>,
    objects_end: Vec<(String, [f64; 3])>,
    contents: Vec<(String, Vec<String>)>,
}

/// Execute one built-in kitchen task in the simulator. `drop_step`
/// (1-based) removes that action to show how the success predicate
/// reacts; 0 executes the full sequence.
#[wasm_bindgen]
pub fn kitchen_run(task: &str, drop_step: usize, swap_noun: &str) -> String {
    let run = || -> Result<KitchenOut, String> {
        let (spec, scene) =
            builtin_task(task).ok_or_else(|| "unknown task (cereal | coffee | drinks)".to_string())?;
        let lib = builtin_library();
        let mut steps: Vec<ActionStep> = spec.subtasks.steps().to_vec();
        if drop_step > 0 && drop_step <= steps.len() {
            steps.remove(drop_step - 1);
        }
        if !swap_noun.is_empty() {
            if let Some(first) = steps.first_mut() {
                if let Some(n) = first.nouns.first_mut() {
                    *n = swap_noun.to_string();
                }
            }
        }
        let actions = ActionSequence(steps.clone());
        let report = align_and_execute(&actions, &lib, &scene, &spec, 0.01).map_err(|e| e.to_string())?;
        let mut path = Vec::new();
        for (_, traj) in &report.trajectories {
            for y in &traj.y {
                path.push([y[0], y[1], y[2]]);
            }
        }
        Ok(KitchenOut {
            task: spec.name.clone(),
            steps: steps.iter().map(|s| s.to_string()).collect(),
            success: report.success,
            log: report.log.clone(),
            gripper_path: path,
            objects_start: scene
                .objects
                .iter()
                .map(|(k, v)| (k.clone(), v.pos))
                .collect(),
            objects_end: report
                .final_state
                .objects
                .iter()
                .map(|(k, v)| (k.clone(), v.pos))
                .collect(),
            contents: report
                .final_state
                .contents
                .iter()
                .map(|(k, v)| (k.clone(), v.iter().cloned().collect()))
                .collect(),
        })
    };
    to_json(run())
}

fn to_json<T: Serialize>(r: Result<T, String>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| error_json(&e.to_string())),
        Err(e) => error_json(&e),
    }
}

fn error_json(msg: &str) -> String {
    serde_json::to_string(&serde_json::json!({ "error": msg })).unwrap()
}
