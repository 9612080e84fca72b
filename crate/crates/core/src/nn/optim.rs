use crate::error::{Error, Result};
use crate::scalar::Real;

use super::params::ParamStore;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// L2 penalty added to the gradient before the moment updates.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

/// Adam with bias correction. Moment buffers follow store order.
#[derive(Debug, Clone)]
pub struct Adam<S> {
    config: AdamConfig,
    steps: i32,
    m: Vec<Vec<S>>,
    v: Vec<Vec<S>>,
}

impl<S: Real> Adam<S> {
    pub fn new(config: AdamConfig, store: &ParamStore<S>) -> Self {
        let zeros = |store: &ParamStore<S>| -> Vec<Vec<S>> {
            store.iter().map(|p| vec![S::zero(); p.len()]).collect()
        };
        Adam {
            config,
            steps: 0,
            m: zeros(store),
            v: zeros(store),
        }
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    /// Applies one update from the accumulated gradients, then zeroes them.
    /// Nothing is modified if any gradient is non-finite.
    pub fn step(&mut self, store: &mut ParamStore<S>) -> Result<()> {
        assert_eq!(
            self.m.len(),
            store.len(),
            "optimizer built for another store"
        );
        for p in store.iter() {
            if p.grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Training(format!(
                    "non-finite gradient in `{}`",
                    p.name
                )));
            }
        }
        self.steps += 1;
        let c = &self.config;
        let (b1, b2) = (S::lit(c.beta1), S::lit(c.beta2));
        let one = S::one();
        let lr = S::lit(c.learning_rate);
        let eps = S::lit(c.eps);
        let wd = S::lit(c.weight_decay);
        let correction1 = one - b1.powi(self.steps);
        let correction2 = one - b2.powi(self.steps);

        for ((p, m), v) in store.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            for k in 0..p.value.len() {
                let g = p.grad[k] + wd * p.value[k];
                m[k] = b1 * m[k] + (one - b1) * g;
                v[k] = b2 * v[k] + (one - b2) * g * g;
                let m_hat = m[k] / correction1;
                let v_hat = v[k] / correction2;
                p.value[k] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
            if p.value.iter().any(|x| !x.is_finite()) {
                return Err(Error::Training(format!("parameter `{}` diverged", p.name)));
            }
            p.grad.iter_mut().for_each(|g| *g = S::zero());
        }
        Ok(())
    }
}
