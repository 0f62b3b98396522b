//! Point-attractor dynamical system with Gaussian-basis forcing:
//!
//!   tau * z' = alpha_z (beta_z (g - y) - z) + f(x)
//!   tau * y' = z
//!   tau * x' = -alpha_x * x
//!
//! with f(x) = sum_i(psi_i w_i) / sum_i(psi_i) * x * (g - y0) per output
//! dimension, so a fitted shape re-targets to new start/goal pairs.

use super::{DmpError, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const DEFAULT_ALPHA_X: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DmpPrimitive {
    pub name: String,
    pub alpha_z: f64,
    pub beta_z: f64,
    /// Nominal duration in seconds.
    pub tau: f64,
    pub alpha_x: f64,
    pub centers: Vec<f64>,
    pub widths: Vec<f64>,
    /// `weights[dim][basis]`.
    pub weights: Vec<Vec<f64>>,
    pub y0: Vec<f64>,
    pub goal: Vec<f64>,
}

impl DmpPrimitive {
    pub fn validate(&self) -> Result<()> {
        if self.alpha_z <= 0.0 || self.beta_z <= 0.0 || self.tau <= 0.0 || self.alpha_x <= 0.0 {
            return Err(DmpError::Config(format!(
                "gains/time constant must be positive: alpha_z={} beta_z={} tau={} alpha_x={}",
                self.alpha_z, self.beta_z, self.tau, self.alpha_x
            )));
        }
        if self.centers.len() != self.widths.len() {
            return Err(DmpError::Config("centers/widths length mismatch".into()));
        }
        for w in &self.weights {
            if w.len() != self.centers.len() {
                return Err(DmpError::Config("weights/basis length mismatch".into()));
            }
            if w.iter().any(|v| !v.is_finite()) {
                return Err(DmpError::Config("non-finite basis weights".into()));
            }
        }
        if self.y0.len() != self.weights.len() || self.goal.len() != self.weights.len() {
            return Err(DmpError::Config("start/goal dimensionality mismatch".into()));
        }
        Ok(())
    }

    pub fn dims(&self) -> usize {
        self.weights.len()
    }

    /// Critically damped zero-forcing primitive (beta = alpha/4).
    pub fn spring(name: &str, dims: usize, alpha_z: f64, tau: f64, n_basis: usize) -> Self {
        let (centers, widths) = basis_grid(n_basis, DEFAULT_ALPHA_X);
        DmpPrimitive {
            name: name.to_string(),
            alpha_z,
            beta_z: alpha_z / 4.0,
            tau,
            alpha_x: DEFAULT_ALPHA_X,
            weights: vec![vec![0.0; n_basis]; dims],
            centers,
            widths,
            y0: vec![0.0; dims],
            goal: vec![0.0; dims],
        }
    }

    fn forcing(&self, x: f64, dim: usize, amplitude: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, (c, h)) in self.centers.iter().zip(&self.widths).enumerate() {
            let psi = (-h * (x - c) * (x - c)).exp();
            num += psi * self.weights[dim][i];
            den += psi;
        }
        if den < 1e-300 {
            return 0.0;
        }
        (num / den) * x * amplitude
    }
}

/// Basis centers placed uniformly in time, mapped through the canonical
/// decay; widths overlap neighbouring centers.
fn basis_grid(n: usize, alpha_x: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2, "need at least two basis functions");
    let centers: Vec<f64> = (0..n)
        .map(|i| (-alpha_x * i as f64 / (n - 1) as f64).exp())
        .collect();
    let mut widths = Vec::with_capacity(n);
    for i in 0..n {
        let gap = if i + 1 < n {
            centers[i] - centers[i + 1]
        } else {
            centers[n - 2] - centers[n - 1]
        };
        widths.push(1.0 / (2.0 * gap * gap));
    }
    (centers, widths)
}

/// Demonstration or rollout: positions (and derivatives) per sample.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub yd: Vec<Vec<f64>>,
    pub ydd: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn end(&self) -> &[f64] {
        self.y.last().expect("non-empty trajectory")
    }
}

/// Fit basis weights to a demonstration by locally weighted regression
/// on the forcing-term targets.
pub fn fit_dmp(
    demo: &Trajectory,
    name: &str,
    alpha_z: f64,
    beta_z: f64,
    n_basis: usize,
) -> Result<DmpPrimitive> {
    if demo.len() < 3 {
        return Err(DmpError::Fit(format!(
            "need at least 3 samples, got {}",
            demo.len()
        )));
    }
    if demo.t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DmpError::Fit("timestamps must be strictly increasing".into()));
    }
    let t0 = demo.t[0];
    let tau = demo.t[demo.len() - 1] - t0;
    if tau <= 0.0 {
        return Err(DmpError::Fit("zero-duration demonstration".into()));
    }
    let dims = demo.y[0].len();
    let y0: Vec<f64> = demo.y[0].clone();
    let goal: Vec<f64> = demo.y[demo.len() - 1].clone();
    let alpha_x = DEFAULT_ALPHA_X;
    let (centers, widths) = basis_grid(n_basis, alpha_x);

    let xs: Vec<f64> = demo
        .t
        .iter()
        .map(|t| (-alpha_x * (t - t0) / tau).exp())
        .collect();

    let mut weights = vec![vec![0.0; n_basis]; dims];
    for d in 0..dims {
        let amp = goal[d] - y0[d];
        if amp.abs() < 1e-10 {
            continue; // amplitude-scaled forcing cannot act on this dim
        }
        // forcing target: f* = tau^2 ydd - alpha_z(beta_z(g - y) - tau yd)
        let targets: Vec<f64> = (0..demo.len())
            .map(|k| {
                let f_star = tau * tau * demo.ydd[k][d]
                    - alpha_z * (beta_z * (goal[d] - demo.y[k][d]) - tau * demo.yd[k][d]);
                f_star / amp
            })
            .collect();
        for (i, (c, h)) in centers.iter().zip(&widths).enumerate() {
            let mut num = 0.0;
            let mut den = 1e-10;
            for (k, x) in xs.iter().enumerate() {
                let psi = (-h * (x - c) * (x - c)).exp();
                num += psi * x * targets[k];
                den += psi * x * x;
            }
            weights[d][i] = num / den;
        }
    }

    let dmp = DmpPrimitive {
        name: name.to_string(),
        alpha_z,
        beta_z,
        tau,
        alpha_x,
        centers,
        widths,
        weights,
        y0,
        goal,
    };
    dmp.validate()?;
    Ok(dmp)
}

/// Integrate the primitive with RK4 from `y0` toward `g` for duration
/// `t_total`. Goal convergence follows from the vanishing canonical
/// state; divergence (unstable gains) aborts with an error.
pub fn rollout(
    dmp: &DmpPrimitive,
    y0: &[f64],
    g: &[f64],
    dt: f64,
    t_total: f64,
) -> Result<Trajectory> {
    dmp.validate()?;
    if dt <= 0.0 {
        return Err(DmpError::Config(format!("dt must be positive, got {dt}")));
    }
    if t_total < dmp.tau {
        return Err(DmpError::Config(format!(
            "rollout horizon {t_total} shorter than the primitive's tau {}",
            dmp.tau
        )));
    }
    let dims = dmp.dims();
    if y0.len() != dims || g.len() != dims {
        return Err(DmpError::Config("start/goal dimensionality mismatch".into()));
    }

    // state: [x, y..., z...]
    let deriv = |state: &[f64], out: &mut [f64]| {
        let x = state[0];
        out[0] = -dmp.alpha_x * x / dmp.tau;
        for d in 0..dims {
            let y = state[1 + d];
            let z = state[1 + dims + d];
            let f = dmp.forcing(x, d, g[d] - y0[d]);
            out[1 + d] = z / dmp.tau;
            out[1 + dims + d] = (dmp.alpha_z * (dmp.beta_z * (g[d] - y) - z) + f) / dmp.tau;
        }
    };

    let n_steps = (t_total / dt).ceil() as usize;
    let mut state = vec![0.0; 1 + 2 * dims];
    state[0] = 1.0;
    state[1..1 + dims].copy_from_slice(y0);

    let mut traj = Trajectory::default();
    let mut k1 = vec![0.0; state.len()];
    let mut k2 = vec![0.0; state.len()];
    let mut k3 = vec![0.0; state.len()];
    let mut k4 = vec![0.0; state.len()];
    let mut tmp = vec![0.0; state.len()];

    let record = |traj: &mut Trajectory, t: f64, state: &[f64], deriv: &dyn Fn(&[f64], &mut [f64])| {
        let mut d = vec![0.0; state.len()];
        deriv(state, &mut d);
        traj.t.push(t);
        traj.y.push(state[1..1 + dims].to_vec());
        traj.yd.push(d[1..1 + dims].to_vec());
        traj.ydd.push(d[1 + dims..].iter().map(|zd| zd / dmp.tau).collect());
    };
    record(&mut traj, 0.0, &state, &deriv);

    for step in 0..n_steps {
        deriv(&state, &mut k1);
        for i in 0..state.len() {
            tmp[i] = state[i] + 0.5 * dt * k1[i];
        }
        deriv(&tmp, &mut k2);
        for i in 0..state.len() {
            tmp[i] = state[i] + 0.5 * dt * k2[i];
        }
        deriv(&tmp, &mut k3);
        for i in 0..state.len() {
            tmp[i] = state[i] + dt * k3[i];
        }
        deriv(&tmp, &mut k4);
        for i in 0..state.len() {
            state[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if state.iter().any(|v| !v.is_finite() || v.abs() > 1e6) {
            return Err(DmpError::Integration(format!(
                "state diverged at step {step} of `{}`",
                dmp.name
            )));
        }
        record(&mut traj, (step + 1) as f64 * dt, &state, &deriv);
    }
    Ok(traj)
}

/// CSV dump: `t,y0,y1,...` one row per sample.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    use std::io::Write;
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    let dims = traj.y.first().map_or(0, |y| y.len());
    write!(w, "t")?;
    for d in 0..dims {
        write!(w, ",y{d}")?;
    }
    writeln!(w)?;
    for (t, y) in traj.t.iter().zip(&traj.y) {
        write!(w, "{t}")?;
        for v in y {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Minimum-jerk point-to-point trajectory, a stock demonstration shape.
pub fn min_jerk_demo(y0: &[f64], g: &[f64], tau: f64, samples: usize) -> Trajectory {
    let dims = y0.len();
    let mut traj = Trajectory::default();
    for k in 0..samples {
        let t = tau * k as f64 / (samples - 1) as f64;
        let s = t / tau;
        let pos_s = 10.0 * s.powi(3) - 15.0 * s.powi(4) + 6.0 * s.powi(5);
        let vel_s = (30.0 * s.powi(2) - 60.0 * s.powi(3) + 30.0 * s.powi(4)) / tau;
        let acc_s = (60.0 * s - 180.0 * s.powi(2) + 120.0 * s.powi(3)) / (tau * tau);
        traj.t.push(t);
        traj.y
            .push((0..dims).map(|d| y0[d] + (g[d] - y0[d]) * pos_s).collect());
        traj.yd.push((0..dims).map(|d| (g[d] - y0[d]) * vel_s).collect());
        traj.ydd
            .push((0..dims).map(|d| (g[d] - y0[d]) * acc_s).collect());
    }
    traj
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_forcing_spring_converges_to_goal_by_three_tau() {
        let dmp = DmpPrimitive::spring("s", 3, 25.0, 1.0, 10);
        let y0 = [0.2, -0.4, 0.1];
        let g = [1.0, 0.6, -0.3];
        let traj = rollout(&dmp, &y0, &g, 0.005, 3.0).unwrap();
        let end = traj.end();
        let range: f64 = (0..3).map(|d| (g[d] - y0[d]).powi(2)).sum::<f64>().sqrt();
        let err: f64 = (0..3).map(|d| (end[d] - g[d]).powi(2)).sum::<f64>().sqrt();
        assert!(err < 1e-3 * range, "endpoint error {err} range {range}");
    }

    #[test]
    fn start_equals_goal_with_zero_weights_stays_constant() {
        let dmp = DmpPrimitive::spring("s", 2, 25.0, 1.0, 10);
        let y0 = [0.5, 0.5];
        let traj = rollout(&dmp, &y0, &y0, 0.01, 1.0).unwrap();
        for y in &traj.y {
            for (a, b) in y.iter().zip(&y0) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_forcing_trajectory_scales_linearly_with_endpoints() {
        let dmp = DmpPrimitive::spring("s", 1, 25.0, 1.0, 10);
        let a = rollout(&dmp, &[0.0], &[1.0], 0.01, 2.0).unwrap();
        let b = rollout(&dmp, &[0.0], &[2.0], 0.01, 2.0).unwrap();
        for (ya, yb) in a.y.iter().zip(&b.y) {
            assert!((2.0 * ya[0] - yb[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn fit_reproduces_minimum_jerk_demo_within_five_percent() {
        let y0 = [0.0, 0.3];
        let g = [1.0, -0.5];
        let demo = min_jerk_demo(&y0, &g, 1.5, 151);
        let dmp = fit_dmp(&demo, "mj", 25.0, 6.25, 20).unwrap();
        let traj = rollout(&dmp, &y0, &g, 1.5 / 150.0, 1.5).unwrap();
        // RMSE against the demo, relative to motion range per dim
        for d in 0..2 {
            let range = (g[d] - y0[d]).abs();
            let mut sq = 0.0;
            let n = demo.len().min(traj.len());
            for k in 0..n {
                let e = demo.y[k][d] - traj.y[k][d];
                sq += e * e;
            }
            let rmse = (sq / n as f64).sqrt();
            assert!(rmse < 0.05 * range, "dim {d}: rmse {rmse} range {range}");
        }
    }

    #[test]
    fn fitting_a_pure_spring_response_yields_near_zero_weights() {
        let dmp = DmpPrimitive::spring("s", 1, 25.0, 1.0, 12);
        let demo = rollout(&dmp, &[0.0], &[1.0], 0.002, 1.0).unwrap();
        let fitted = fit_dmp(&demo, "refit", 25.0, 6.25, 12).unwrap();
        let max_w = fitted.weights[0]
            .iter()
            .fold(0.0f64, |m, w| m.max(w.abs()));
        // forcing amplitude is |g-y0| = 1, so weights are comparable to
        // acceleration scale; near-zero here means small against alpha_z
        assert!(max_w < 0.5, "max weight {max_w}");
    }

    #[test]
    fn bump_demo_returning_to_start_ends_at_goal() {
        // g == y0 with a bump in between: amplitude scaling suppresses
        // the forcing, so the rollout stays at the goal
        let tau = 1.0;
        let samples = 101;
        let mut demo = Trajectory::default();
        for k in 0..samples {
            let t = tau * k as f64 / (samples - 1) as f64;
            let s = t / tau;
            let bump = (std::f64::consts::PI * s).sin().powi(2);
            demo.t.push(t);
            demo.y.push(vec![bump * 0.4]);
            let ds = 2.0 * (std::f64::consts::PI * s).sin() * (std::f64::consts::PI * s).cos()
                * std::f64::consts::PI
                / tau;
            demo.yd.push(vec![ds * 0.4]);
            let dds = 2.0 * std::f64::consts::PI * std::f64::consts::PI
                * ((std::f64::consts::PI * s).cos().powi(2)
                    - (std::f64::consts::PI * s).sin().powi(2))
                / (tau * tau);
            demo.ydd.push(vec![dds * 0.4]);
        }
        let dmp = fit_dmp(&demo, "bump", 25.0, 6.25, 15).unwrap();
        let traj = rollout(&dmp, &[0.0], &[0.0], 0.005, 2.0).unwrap();
        assert!(traj.end()[0].abs() < 1e-6);
    }

    #[test]
    fn degenerate_demo_is_a_fit_error() {
        let demo = Trajectory {
            t: vec![0.0, 0.0, 0.0],
            y: vec![vec![0.0]; 3],
            yd: vec![vec![0.0]; 3],
            ydd: vec![vec![0.0]; 3],
        };
        assert!(matches!(fit_dmp(&demo, "bad", 25.0, 6.25, 5), Err(DmpError::Fit(_))));
    }

    #[test]
    fn unstable_gains_are_detected() {
        let mut dmp = DmpPrimitive::spring("s", 1, 25.0, 1.0, 5);
        dmp.beta_z = -1.0; // invalid, caught by validation
        assert!(rollout(&dmp, &[0.0], &[1.0], 0.01, 1.0).is_err());
        // explosive but "valid-looking" weights diverge at integration time
        let mut wild = DmpPrimitive::spring("w", 1, 2000.0, 0.01, 5);
        wild.weights[0] = vec![1e9; 5];
        assert!(matches!(
            rollout(&wild, &[0.0], &[1.0], 0.05, 1.0),
            Err(DmpError::Integration(_)) | Err(DmpError::Config(_))
        ));
    }

    #[test]
    fn goal_convergence_for_random_bounded_weights() {
        for seed in 0..5 {
            let mut rng = crate::numerics::RngState::new(seed);
            let mut dmp = DmpPrimitive::spring("r", 2, 25.0, 1.0, 12);
            // alpha_x = 1 leaves x(5 tau) ~ 6.7e-3, so the residual
            // forcing bounds the usable weight scale for 1e-3 accuracy
            for d in 0..2 {
                for w in dmp.weights[d].iter_mut() {
                    *w = rng.normal() * 15.0;
                }
            }
            let y0 = [rng.normal(), rng.normal()];
            let g = [rng.normal() + 1.5, rng.normal() - 1.5];
            let traj = rollout(&dmp, &y0, &g, 0.005, 5.0).unwrap();
            let range: f64 = (0..2).map(|d| (g[d] - y0[d]).powi(2)).sum::<f64>().sqrt();
            let err: f64 = (0..2)
                .map(|d| (traj.end()[d] - g[d]).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(err < 1e-3 * range.max(1.0), "seed {seed}: err {err}");
        }
    }
}
