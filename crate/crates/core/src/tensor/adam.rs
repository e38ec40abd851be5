use serde::{Deserialize, Serialize};

use super::array::{Scalar, Tensor};
use super::graph::{Gradients, ParamSet};
use super::TensorError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment accumulators for every parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub step: u64,
    pub first: Vec<Tensor<T>>,
    pub second: Vec<Tensor<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &ParamSet<T>, config: AdamConfig) -> Self {
        let zeros = |p: &ParamSet<T>| p.entries().iter().map(|e| Tensor::zeros(e.value.shape())).collect();
        AdamState {
            config,
            step: 0,
            first: zeros(params),
            second: zeros(params),
        }
    }
}

/// One bias-corrected Adam update. Non-trainable parameters and frozen rows
/// are skipped.
pub fn adam_step<T: Scalar>(
    params: &mut ParamSet<T>,
    grads: &Gradients<T>,
    state: &mut AdamState<T>,
) -> Result<(), TensorError> {
    if grads.len() != params.len() || state.first.len() != params.len() {
        return Err(TensorError::Usage(
            "parameter, gradient and optimizer state counts differ".into(),
        ));
    }
    for id in params.ids() {
        let (p, g) = (params.get(id), grads.get(id));
        if p.shape() != g.shape() || state.first[id.index()].shape() != p.shape() {
            return Err(TensorError::Shape {
                op: "adam_step",
                left: p.shape().to_vec(),
                right: g.shape().to_vec(),
            });
        }
    }
    state.step += 1;
    let c = state.config;
    let t = state.step as i32;
    let (b1, b2) = (T::of(c.beta1), T::of(c.beta2));
    let correct1 = T::of(1.0 - c.beta1.powi(t));
    let correct2 = T::of(1.0 - c.beta2.powi(t));
    let lr = T::of(c.learning_rate);
    let eps = T::of(c.epsilon);

    for id in params.ids() {
        let entry = params.entry_mut(id);
        if !entry.trainable {
            continue;
        }
        let cols = entry.value.cols();
        let frozen = entry.frozen_rows.clone();
        let g = grads.get(id).data();
        let m = state.first[id.index()].data_mut();
        let v = state.second[id.index()].data_mut();
        let theta = entry.value.data_mut();
        for i in 0..theta.len() {
            if !frozen.is_empty() && frozen.contains(&(i / cols)) {
                continue;
            }
            m[i] = b1 * m[i] + (T::one() - b1) * g[i];
            v[i] = b2 * v[i] + (T::one() - b2) * g[i] * g[i];
            let m_hat = m[i] / correct1;
            let v_hat = v[i] / correct2;
            theta[i] = theta[i] - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
