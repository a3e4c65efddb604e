use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Adam hyperparameters. The defaults are the ones from Kingma & Ba.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for Adam {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub hyper: Adam,
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl OptimizerState {
    pub fn new(hyper: Adam, num_params: usize) -> Self {
        Self {
            hyper,
            step: 0,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
        }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut OptimizerState) -> Result<()> {
    if params.len() != grads.len()
        || params.len() != state.m.len()
        || state.m.len() != state.v.len()
    {
        return Err(Error::arg(format!(
            "adam: {} params, {} grads, {} moments",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    let Adam {
        lr,
        beta1,
        beta2,
        eps,
    } = state.hyper;
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - beta1.powi(t);
    let bc2 = 1.0 - beta2.powi(t);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = vec![1.0, -2.0, 0.5];
        let mut s = OptimizerState::new(Adam::default(), 3);
        adam_step(&mut p, &[0.0; 3], &mut s).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        // m_hat = 1, v_hat = 1 at t = 1, so the step is lr / (1 + eps).
        let mut p = vec![0.0];
        let mut s = OptimizerState::new(Adam::default(), 1);
        adam_step(&mut p, &[1.0], &mut s).unwrap();
        assert_abs_diff_eq!(p[0], -1e-3 / (1.0 + 1e-8), epsilon = 1e-18);
    }

    #[test]
    fn constant_gradient_step_tends_to_lr() {
        let mut p = vec![0.0];
        let mut s = OptimizerState::new(Adam::default(), 1);
        let mut last = 0.0;
        for _ in 0..5000 {
            let before = p[0];
            adam_step(&mut p, &[0.37], &mut s).unwrap();
            last = before - p[0];
        }
        assert_abs_diff_eq!(last, 1e-3, epsilon = 1e-9);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut p = vec![0.0; 2];
        let mut s = OptimizerState::new(Adam::default(), 2);
        assert!(adam_step(&mut p, &[1.0], &mut s).is_err());
        assert_eq!(s.step, 0);
    }
}
