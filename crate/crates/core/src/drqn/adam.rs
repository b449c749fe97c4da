use serde::{Deserialize, Serialize};

use super::network::{DrqnParams, TENSOR_NAMES};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected moment estimates, shaped like the parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: DrqnParams,
    pub v: DrqnParams,
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &DrqnParams, config: AdamConfig) -> Self {
        let zeros = DrqnParams::zeros(params.shape());
        Self {
            config,
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    /// Applies one update. Leaves everything untouched if any gradient is non-finite.
    pub fn step(&mut self, params: &mut DrqnParams, grads: &DrqnParams) -> Result<()> {
        if params.shape() != grads.shape() || params.shape() != self.m.shape() {
            return Err(Error::ShapeMismatch("optimizer, parameter and gradient shapes differ".into()));
        }
        for (name, g) in TENSOR_NAMES.iter().zip(grads.slices()) {
            if g.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteGradient(name));
            }
        }
        self.step += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        let tensors = params.slices_mut().into_iter().zip(grads.slices());
        let moments = self.m.slices_mut().into_iter().zip(self.v.slices_mut());
        for ((p, g), (m, v)) in tensors.zip(moments) {
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
