use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-4, beta1: 0.5, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(n_params: usize, config: AdamConfig) -> Self {
        Self { step: 0, m: vec![0.0; n_params], v: vec![0.0; n_params], config }
    }
}

/// Bias-corrected Adam update in place. Leaves everything untouched when a
/// gradient is non-finite.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::Dimension(format!(
            "{} params, {} grads, {} moments",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::Numeric(format!("non-finite gradient at parameter {i}")));
    }
    let AdamConfig { lr, beta1, beta2, eps } = state.config;
    state.step += 1;
    let c1 = 1.0 - beta1.powf(state.step as f64);
    let c2 = 1.0 - beta2.powf(state.step as f64);
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_only_counts() {
        let mut p = vec![1.0, -2.0];
        let mut s = AdamState::new(2, AdamConfig::default());
        adam_step(&mut p, &[0.0, 0.0], &mut s).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn first_step_moves_by_lr_sign() {
        let cfg = AdamConfig { lr: 0.01, eps: 1e-12, ..AdamConfig::default() };
        let mut s = AdamState::new(3, cfg);
        let mut p = vec![0.0; 3];
        adam_step(&mut p, &[3.0, -0.5, 1e-3], &mut s).unwrap();
        for (got, want) in p.iter().zip([-0.01, 0.01, -0.01]) {
            assert!((got - want).abs() < 1e-9, "{got}");
        }
    }

    #[test]
    fn non_finite_rejected_without_change() {
        let mut p = vec![1.0];
        let mut s = AdamState::new(1, AdamConfig::default());
        assert!(matches!(adam_step(&mut p, &[f64::NAN], &mut s), Err(Error::Numeric(_))));
        assert_eq!((p[0], s.step), (1.0, 0));
        assert!(adam_step(&mut p, &[1.0, 2.0], &mut s).is_err());
    }

    #[test]
    fn deterministic_trajectory() {
        let run = || {
            let mut p = vec![0.3, -0.7];
            let mut s = AdamState::new(2, AdamConfig::default());
            for k in 0..50 {
                let g = [p[0] - 1.0 + k as f64 * 1e-3, 2.0 * p[1]];
                adam_step(&mut p, &g, &mut s).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }
}
