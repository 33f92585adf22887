//! Adam with bias correction and optional L2 weight decay.

use super::params::ParamSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Coefficient of the L2 penalty added to the gradient.
    pub weight_decay: f64,
}

impl AdamConfig {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.0,
        }
    }
}

/// Optimiser state for one parameter set.
#[derive(Debug, Clone)]
pub struct Adam<P: ParamSet> {
    config: AdamConfig,
    steps: u32,
    first: P,
    second: P,
}

impl<P: ParamSet> Adam<P> {
    pub fn new(config: AdamConfig, params: &P) -> Self {
        Self {
            config,
            steps: 0,
            first: params.zeros_like(),
            second: params.zeros_like(),
        }
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    /// Applies one update in place.
    pub fn step(&mut self, params: &mut P, grads: &P) {
        self.steps += 1;
        let c = self.config;
        let correction1 = 1.0 - c.beta1.powi(self.steps as i32);
        let correction2 = 1.0 - c.beta2.powi(self.steps as i32);
        let tensors = params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.first.tensors_mut())
            .zip(self.second.tensors_mut());
        for (((theta, grad), m), v) in tensors {
            for (((t, &g), m), v) in theta.iter_mut().zip(grad.iter()).zip(m.iter_mut()).zip(v.iter_mut()) {
                let g = g + c.weight_decay * *t;
                *m = c.beta1 * *m + (1.0 - c.beta1) * g;
                *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
                let m_hat = *m / correction1;
                let v_hat = *v / correction2;
                *t -= c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon);
            }
        }
    }
}
