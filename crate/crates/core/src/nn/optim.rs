//! Parameter update rules: plain SGD and bias-corrected Adam.

use super::{check_congruent, check_shape_chain, Gradients, Layer, ModelParams};
use crate::error::{Error, Result};
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    Adam,
}

/// Hyperparameters for one local training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: Optimizer,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Seeds the minibatch shuffle order.
    pub shuffle_seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            epochs: 5,
            batch_size: 32,
            optimizer: Optimizer::Adam,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            shuffle_seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Adam moment accumulators, shape-congruent with the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<Layer>,
    pub second_moment: Vec<Layer>,
    pub step: u64,
}

impl AdamState {
    /// Fresh all-zero state for the given parameter shapes.
    pub fn zeros(params: &ModelParams) -> Self {
        let zero_like = |layers: &[Layer]| -> Vec<Layer> {
            layers
                .iter()
                .map(|l| Layer {
                    weights: Array2::zeros(l.weights.dim()),
                    bias: Array1::zeros(l.bias.len()),
                })
                .collect()
        };
        Self {
            first_moment: zero_like(&params.layers),
            second_moment: zero_like(&params.layers),
            step: 0,
        }
    }
}

/// `W - eta * g`, elementwise.
pub fn sgd_step(params: &ModelParams, grads: &Gradients, learning_rate: f64) -> Result<ModelParams> {
    check_congruent(params, grads)?;
    let layers = params
        .layers
        .iter()
        .zip(grads.layers.iter())
        .map(|(p, g)| Layer {
            weights: &p.weights - &(learning_rate * &g.weights),
            bias: &p.bias - &(learning_rate * &g.bias),
        })
        .collect();
    Ok(ModelParams {
        config: params.config,
        layers,
    })
}

/// One bias-corrected Adam update. Returns the new parameters and the
/// advanced state (`step` incremented by 1).
pub fn adam_step(
    params: &ModelParams,
    grads: &Gradients,
    state: &AdamState,
    cfg: &TrainingConfig,
) -> Result<(ModelParams, AdamState)> {
    check_congruent(params, grads)?;
    check_shape_chain(&params.config, &state.first_moment)?;
    check_shape_chain(&params.config, &state.second_moment)?;

    let t = state.step + 1;
    let bias1 = 1.0 - cfg.beta1.powi(t as i32);
    let bias2 = 1.0 - cfg.beta2.powi(t as i32);

    let mut new_layers = Vec::with_capacity(params.layers.len());
    let mut new_m = Vec::with_capacity(params.layers.len());
    let mut new_v = Vec::with_capacity(params.layers.len());

    for i in 0..params.layers.len() {
        let p = &params.layers[i];
        let g = &grads.layers[i];
        let m = &state.first_moment[i];
        let v = &state.second_moment[i];

        let m_w = cfg.beta1 * &m.weights + (1.0 - cfg.beta1) * &g.weights;
        let m_b = cfg.beta1 * &m.bias + (1.0 - cfg.beta1) * &g.bias;
        let v_w = cfg.beta2 * &v.weights + (1.0 - cfg.beta2) * &g.weights.mapv(|x| x * x);
        let v_b = cfg.beta2 * &v.bias + (1.0 - cfg.beta2) * &g.bias.mapv(|x| x * x);

        let step_w = m_w.mapv(|x| x / bias1) / (v_w.mapv(|x| (x / bias2).sqrt() + cfg.epsilon));
        let step_b = m_b.mapv(|x| x / bias1) / (v_b.mapv(|x| (x / bias2).sqrt() + cfg.epsilon));

        new_layers.push(Layer {
            weights: &p.weights - &(cfg.learning_rate * &step_w),
            bias: &p.bias - &(cfg.learning_rate * &step_b),
        });
        new_m.push(Layer {
            weights: m_w,
            bias: m_b,
        });
        new_v.push(Layer {
            weights: v_w,
            bias: v_b,
        });
    }

    Ok((
        ModelParams {
            config: params.config,
            layers: new_layers,
        },
        AdamState {
            first_moment: new_m,
            second_moment: new_v,
            step: t,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_model, ModelConfig};
    use ndarray::{arr1, arr2};

    fn one_param_model(w: f64) -> ModelParams {
        let cfg = ModelConfig::new(1, 0).with_hidden(1, 1);
        ModelParams {
            config: cfg,
            layers: (0..3)
                .map(|_| Layer {
                    weights: arr2(&[[w]]),
                    bias: arr1(&[0.0]),
                })
                .collect(),
        }
    }

    fn grads_like(params: &ModelParams, g: f64) -> Gradients {
        Gradients {
            layers: params
                .layers
                .iter()
                .map(|l| Layer {
                    weights: l.weights.mapv(|_| g),
                    bias: l.bias.mapv(|_| g),
                })
                .collect(),
        }
    }

    #[test]
    fn sgd_matches_arithmetic() {
        let params = one_param_model(1.0);
        let grads = grads_like(&params, 2.0);
        let next = sgd_step(&params, &grads, 0.1).unwrap();
        assert!((next.layers[0].weights[(0, 0)] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn sgd_zero_grad_and_zero_rate_are_fixed_points() {
        let params = one_param_model(1.5);
        let zero = grads_like(&params, 0.0);
        assert_eq!(sgd_step(&params, &zero, 0.1).unwrap(), params);
        let grads = grads_like(&params, 3.0);
        assert_eq!(sgd_step(&params, &grads, 0.0).unwrap(), params);
    }

    #[test]
    fn sgd_rejects_incongruent_grads() {
        let params = init_model(&ModelConfig::new(4, 1)).unwrap();
        let other = init_model(&ModelConfig::new(5, 1)).unwrap();
        let grads = grads_like(&other, 1.0);
        assert!(sgd_step(&params, &grads, 0.1).is_err());
    }

    #[test]
    fn adam_first_step_is_signed_learning_rate() {
        // With zero state, the first update is -lr * g / (|g| + eps'), which
        // is approximately -lr * sign(g).
        let cfg = TrainingConfig {
            learning_rate: 0.001,
            ..TrainingConfig::default()
        };
        let params = one_param_model(1.0);
        let grads = grads_like(&params, 5.0);
        let state = AdamState::zeros(&params);
        let (next, state) = adam_step(&params, &grads, &state, &cfg).unwrap();
        let delta = next.layers[0].weights[(0, 0)] - 1.0;
        assert!((delta + 0.001).abs() < 1e-9, "delta = {delta}");
        assert_eq!(state.step, 1);
    }

    #[test]
    fn adam_zero_gradient_fresh_state_is_identity() {
        let cfg = TrainingConfig::default();
        let params = one_param_model(0.7);
        let grads = grads_like(&params, 0.0);
        let state = AdamState::zeros(&params);
        let (next, _) = adam_step(&params, &grads, &state, &cfg).unwrap();
        assert_eq!(next, params);
    }
}
