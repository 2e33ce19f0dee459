use serde::{Deserialize, Serialize};

use super::mlp::{Gradients, Mlp};
use crate::{Error, Result};

/// Adam optimizer state for one [`Mlp`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    m_weights: Vec<Vec<f64>>,
    m_biases: Vec<Vec<f64>>,
    v_weights: Vec<Vec<f64>>,
    v_biases: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(net: &Mlp, learning_rate: f64) -> Self {
        let zeros = net.zero_gradients();
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m_weights: zeros.weights.clone(),
            m_biases: zeros.biases.clone(),
            v_weights: zeros.weights,
            v_biases: zeros.biases,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Whether the moment buffers have the shapes of `net`'s parameters.
    pub fn matches(&self, net: &Mlp) -> bool {
        self.m_weights.len() == net.layers().len()
            && net.layers().iter().enumerate().all(|(i, l)| {
                self.m_weights[i].len() == l.weights.len()
                    && self.v_weights[i].len() == l.weights.len()
                    && self.m_biases[i].len() == l.biases.len()
                    && self.v_biases[i].len() == l.biases.len()
            })
    }

    /// Applies one bias-corrected Adam update to every parameter.
    pub fn apply(&mut self, net: &mut Mlp, grads: &Gradients) -> Result<()> {
        if !self.matches(net) {
            return Err(Error::State("optimizer state does not match network shape".into()));
        }
        self.step += 1;
        let t = self.step as i32;
        let lr_t = self.learning_rate * (1.0 - self.beta2.powi(t)).sqrt() / (1.0 - self.beta1.powi(t));
        let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);
        let update = |params: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for (((p, g), m), v) in params.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= lr_t * *m / (v.sqrt() + eps);
            }
        };
        for (i, layer) in net.layers_mut().iter_mut().enumerate() {
            update(&mut layer.weights, &grads.weights[i], &mut self.m_weights[i], &mut self.v_weights[i]);
            update(&mut layer.biases, &grads.biases[i], &mut self.m_biases[i], &mut self.v_biases[i]);
        }
        Ok(())
    }
}
