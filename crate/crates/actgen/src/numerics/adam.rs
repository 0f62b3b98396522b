//! Adam optimizer over named flat parameter buffers. Each parameter
//! keeps its own first/second-moment buffers and step counter; a
//! parameter only advances when a gradient is actually supplied, so
//! frozen or untouched submodules stay bit-identical.

use super::{NumericsError, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Slot {
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Adam {
    pub config: AdamConfig,
    slots: BTreeMap<String, Slot>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Adam {
            config,
            slots: BTreeMap::new(),
        }
    }

    /// One bias-corrected update of a single named parameter.
    pub fn step(&mut self, name: &str, values: &mut [f64], grad: &[f64]) -> Result<()> {
        assert_eq!(values.len(), grad.len(), "param/grad length mismatch");
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(NumericsError::TrainingDivergence {
                param: name.to_string(),
            });
        }
        let slot = self.slots.entry(name.to_string()).or_insert_with(|| Slot {
            t: 0,
            m: vec![0.0; values.len()],
            v: vec![0.0; values.len()],
        });
        let c = &self.config;
        slot.t += 1;
        let bc1 = 1.0 - c.beta1.powi(slot.t as i32);
        let bc2 = 1.0 - c.beta2.powi(slot.t as i32);
        for i in 0..values.len() {
            slot.m[i] = c.beta1 * slot.m[i] + (1.0 - c.beta1) * grad[i];
            slot.v[i] = c.beta2 * slot.v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
            let mhat = slot.m[i] / bc1;
            let vhat = slot.v[i] / bc2;
            values[i] -= c.lr * mhat / (vhat.sqrt() + c.eps);
        }
        Ok(())
    }
}
