use serde::{Deserialize, Serialize};

use super::ParamTensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
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

/// First/second moment estimates for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update of `param` from its accumulated gradient.
/// The gradient is zeroed afterwards.
pub fn adam_step(cfg: &AdamConfig, state: &mut AdamState, param: &mut ParamTensor) -> Result<()> {
    if !param.grad_is_finite() {
        return Err(Error::NonFiniteGradient(format!("{:?}", param.shape())));
    }
    debug_assert_eq!(state.m.len(), param.len());
    state.t += 1;
    let bc1 = 1.0 - cfg.beta1.powi(state.t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(state.t as i32);
    for (((p, g), m), v) in param
        .value
        .iter_mut()
        .zip(param.grad.iter())
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
    param.zero_grad();
    Ok(())
}

/// Adam over an ordered set of parameter tensors.
#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    states: Vec<AdamState>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Adam {
            config,
            states: Vec::new(),
        }
    }

    /// Steps every tensor. The parameter list must have the same order and
    /// shapes on every call. All gradients are validated before any update.
    pub fn step(&mut self, params: &mut [(String, &mut ParamTensor)]) -> Result<()> {
        if self.states.is_empty() {
            self.states = params.iter().map(|(_, p)| AdamState::new(p.len())).collect();
        }
        if self.states.len() != params.len() {
            return Err(Error::dims("Adam parameter count", self.states.len(), params.len()));
        }
        if let Some((name, _)) = params.iter().find(|(_, p)| !p.grad_is_finite()) {
            return Err(Error::NonFiniteGradient(name.clone()));
        }
        for ((_, p), s) in params.iter_mut().zip(self.states.iter_mut()) {
            adam_step(&self.config, s, p)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_param() {
        let mut p = ParamTensor::from_values(&[3], vec![1.0, -2.0, 0.5]).unwrap();
        let mut s = AdamState::new(3);
        adam_step(&AdamConfig::default(), &mut s, &mut p).unwrap();
        assert_eq!(p.value, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let cfg = AdamConfig {
            lr: 0.1,
            ..AdamConfig::default()
        };
        let mut p = ParamTensor::zeros(&[1]);
        p.grad[0] = 1.0;
        let mut s = AdamState::new(1);
        adam_step(&cfg, &mut s, &mut p).unwrap();
        // m_hat = v_hat = 1, step = lr / (1 + eps)
        assert!((p.value[0] + 0.1 / (1.0 + 1e-8)).abs() < 1e-15);
        assert_eq!(p.grad[0], 0.0);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn identical_inputs_identical_updates() {
        let cfg = AdamConfig::default();
        let mut a = ParamTensor::from_values(&[2], vec![0.3, 0.4]).unwrap();
        let mut b = a.clone();
        let (mut sa, mut sb) = (AdamState::new(2), AdamState::new(2));
        for k in 0..5 {
            a.grad = vec![k as f64, -1.0];
            b.grad = vec![k as f64, -1.0];
            adam_step(&cfg, &mut sa, &mut a).unwrap();
            adam_step(&cfg, &mut sb, &mut b).unwrap();
        }
        assert_eq!(a, b);
        assert!(sa.v.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn zero_lr_never_moves() {
        let cfg = AdamConfig {
            lr: 0.0,
            ..AdamConfig::default()
        };
        let mut p = ParamTensor::from_values(&[2], vec![0.3, 0.4]).unwrap();
        let mut s = AdamState::new(2);
        for _ in 0..10 {
            p.grad = vec![3.0, -7.0];
            adam_step(&cfg, &mut s, &mut p).unwrap();
        }
        assert_eq!(p.value, vec![0.3, 0.4]);
    }

    #[test]
    fn rejects_non_finite_gradient() {
        let mut p = ParamTensor::zeros(&[1]);
        p.grad[0] = f64::NAN;
        let mut opt = Adam::new(AdamConfig::default());
        let err = opt.step(&mut [("w".to_string(), &mut p)]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteGradient(name) if name == "w"));
    }
}
