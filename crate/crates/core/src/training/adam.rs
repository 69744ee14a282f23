//! Bias-corrected Adam update, full-batch.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            epochs: 1000,
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: usize,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }
}

pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, cfg: &AdamConfig) {
    debug_assert_eq!(params.len(), grads.len());
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    for i in 0..params.len() {
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_magnitude_is_learning_rate() {
        let cfg = AdamConfig::default();
        let mut p = vec![0.0];
        let mut st = AdamState::new(1);
        adam_step(&mut p, &[1.0], &mut st, &cfg);
        // m_hat = 1, v_hat = 1: step = -lr / (1 + eps)
        assert!((p[0] + 0.001 / (1.0 + 1e-8)).abs() < 1e-12);
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let cfg = AdamConfig::default();
        let mut p = vec![0.3, -0.7];
        let before = p.clone();
        let mut st = AdamState::new(2);
        for _ in 0..5 {
            adam_step(&mut p, &[0.0, 0.0], &mut st, &cfg);
        }
        assert_eq!(p, before);
    }

    #[test]
    fn first_step_opposes_gradient_sign() {
        let cfg = AdamConfig::default();
        for g in [3.0, -0.02, 1e-6, -5e4] {
            let mut p = vec![0.0];
            let mut st = AdamState::new(1);
            adam_step(&mut p, &[g], &mut st, &cfg);
            assert!(p[0] * g < 0.0, "g = {g}, step = {}", p[0]);
        }
    }
}
