use serde::{Deserialize, Serialize};

use super::graph::{Gradients, ParamSet};
use super::tensor::Tensor2;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Global-norm clipping threshold applied before each step.
    pub clip_norm: Option<f64>,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            clip_norm: Some(5.0),
        }
    }
}

/// Adam with bias correction. Moments mirror the parameter shapes.
#[derive(Clone, Debug)]
pub struct Adam {
    pub config: AdamConfig,
    first: Vec<Tensor2>,
    second: Vec<Tensor2>,
    steps: u64,
}

impl Adam {
    pub fn new(config: AdamConfig, params: &ParamSet) -> Result<Self> {
        if !(config.lr > 0.0) {
            return Err(Error::Invalid(format!(
                "learning rate must be > 0, got {}",
                config.lr
            )));
        }
        let zeros: Vec<Tensor2> = params
            .entries()
            .iter()
            .map(|e| Tensor2::zeros(e.tensor.rows(), e.tensor.cols()))
            .collect();
        Ok(Self {
            config,
            first: zeros.clone(),
            second: zeros,
            steps: 0,
        })
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Applies one update in place. The gradients are clipped in place when
    /// a clip norm is configured.
    pub fn step(&mut self, params: &mut ParamSet, grads: &mut Gradients) -> Result<()> {
        if grads.len() != params.len() || self.first.len() != params.len() {
            return Err(Error::Invalid(format!(
                "{} gradients for {} parameters",
                grads.len(),
                params.len()
            )));
        }
        for id in params.ids() {
            let (g, p) = (grads.get(id), params.get(id));
            if g.shape() != p.shape() {
                return Err(Error::Invalid(format!(
                    "gradient shape {:?} for parameter `{}` of shape {:?}",
                    g.shape(),
                    params.name(id),
                    p.shape()
                )));
            }
            if !g.is_finite() {
                return Err(Error::NonFiniteGradient {
                    param: params.name(id).to_string(),
                });
            }
        }
        if let Some(max) = self.config.clip_norm {
            grads.clip_global_norm(max);
        }
        self.steps += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            epsilon,
            ..
        } = self.config;
        let t = self.steps as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for id in params.ids() {
            let i = id.index();
            let g = grads.get(id).data();
            let m = self.first[i].data_mut();
            let v = self.second[i].data_mut();
            let p = params.get_mut(id).data_mut();
            for k in 0..p.len() {
                m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
                v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                p[k] -= lr * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}
