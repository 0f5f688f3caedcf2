//! Dense 64-32-1 network: parameters, forward pass, loss, and analytic
//! gradients.
//!
//! The network is three fully connected layers: ReLU, ReLU, then a single
//! sigmoid output. All arithmetic is `f64`. Weight matrices are stored
//! `(fan_in, fan_out)`; a batch of `n` rows produces `n` probabilities.
//!
//! Conventions fixed here (and relied on by the tests):
//! - ReLU subgradient at exactly 0 is 0.
//! - Probabilities are clamped to `[1e-12, 1 - 1e-12]` before logs, and the
//!   backward pass treats the clamp as part of the loss (zero gradient where
//!   the clamp is active).
//! - The sigmoid output is nudged into the open interval `(0, 1)` so extreme
//!   logits cannot round to exactly 0 or 1.

mod optim;
mod params_io;
mod train;

pub use optim::{adam_step, sgd_step, AdamState, Optimizer, TrainingConfig};
pub use params_io::{
    deserialize_params, load_params, save_params, serialize_params, LayerDto, ParamsDto,
};
pub use train::train_local;

use crate::error::{Error, Result};
use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// Clamp bound applied to probabilities before taking logs.
pub const PROB_CLAMP: f64 = 1e-12;

/// Architecture of the classifier network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    /// Always 1: a single sigmoid unit.
    pub output: usize,
    /// Seed for weight initialization.
    pub seed: u64,
}

impl ModelConfig {
    /// Config with the default 64-32-1 hidden sizes.
    pub fn new(input_dim: usize, seed: u64) -> Self {
        Self {
            input_dim,
            hidden1: 64,
            hidden2: 32,
            output: 1,
            seed,
        }
    }

    pub fn with_hidden(mut self, hidden1: usize, hidden2: usize) -> Self {
        self.hidden1 = hidden1;
        self.hidden2 = hidden2;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden1 == 0 || self.hidden2 == 0 {
            return Err(Error::Config(
                "input_dim and hidden sizes must be at least 1".into(),
            ));
        }
        if self.output != 1 {
            return Err(Error::Config("output layer is fixed at 1 unit".into()));
        }
        Ok(())
    }

    /// Layer shapes as `(fan_in, fan_out)` triples.
    pub fn layer_shapes(&self) -> [(usize, usize); 3] {
        [
            (self.input_dim, self.hidden1),
            (self.hidden1, self.hidden2),
            (self.hidden2, self.output),
        ]
    }
}

/// One dense layer: weights `(fan_in, fan_out)` plus a bias per output unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Layer {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weights: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }
}

/// The full parameter set of the three-layer network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub layers: Vec<Layer>,
}

/// Loss gradients, shape-congruent with the parameters they differentiate.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl ModelParams {
    /// Checks the layer-shape chain against the config and that every value
    /// is finite.
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        check_shape_chain(&self.config, &self.layers)?;
        for (i, layer) in self.layers.iter().enumerate() {
            let finite = layer.weights.iter().all(|v| v.is_finite())
                && layer.bias.iter().all(|v| v.is_finite());
            if !finite {
                return Err(Error::Data(format!("layer {i} contains non-finite values")));
            }
        }
        Ok(())
    }

    /// True when every parameter value is finite.
    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weights.iter().all(|v| v.is_finite()) && l.bias.iter().all(|v| v.is_finite())
        })
    }

    /// Total number of scalar parameters.
    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }
}

pub(crate) fn check_shape_chain(config: &ModelConfig, layers: &[Layer]) -> Result<()> {
    let shapes = config.layer_shapes();
    if layers.len() != shapes.len() {
        return Err(Error::Shape(format!(
            "expected {} layers, got {}",
            shapes.len(),
            layers.len()
        )));
    }
    for (i, (layer, &(fan_in, fan_out))) in layers.iter().zip(shapes.iter()).enumerate() {
        if layer.weights.dim() != (fan_in, fan_out) || layer.bias.len() != fan_out {
            return Err(Error::Shape(format!(
                "layer {i}: expected weights ({fan_in}x{fan_out}) and bias [{fan_out}], \
                 got weights ({}x{}) and bias [{}]",
                layer.weights.nrows(),
                layer.weights.ncols(),
                layer.bias.len()
            )));
        }
    }
    Ok(())
}

fn check_congruent(params: &ModelParams, grads: &Gradients) -> Result<()> {
    check_shape_chain(&params.config, &grads.layers)
}

/// Initializes parameters: Xavier-uniform weights in
/// `[-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))]` drawn from a
/// generator seeded by `config.seed`, biases zero. Draw order is layer-major,
/// then row-major within each weight matrix, so equal seeds give bit-identical
/// parameters.
pub fn init_model(config: &ModelConfig) -> Result<ModelParams> {
    config.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let layers = config
        .layer_shapes()
        .iter()
        .map(|&(fan_in, fan_out)| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let weights = Array2::from_shape_fn((fan_in, fan_out), |_| {
                rng.random_range(-limit..limit)
            });
            Layer {
                weights,
                bias: Array1::zeros(fan_out),
            }
        })
        .collect();
    Ok(ModelParams {
        config: *config,
        layers,
    })
}

fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Numerically stable logistic sigmoid, nudged into the open interval.
fn sigmoid(z: f64) -> f64 {
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Per-layer activations retained for the backward pass.
struct ForwardCache {
    /// Pre-activation inputs of each layer (z1, z2, z3 columns-wise).
    z1: Array2<f64>,
    a1: Array2<f64>,
    z2: Array2<f64>,
    a2: Array2<f64>,
    probs: Array1<f64>,
}

fn forward_cached(params: &ModelParams, batch: &Array2<f64>) -> Result<ForwardCache> {
    if batch.ncols() != params.config.input_dim {
        return Err(Error::Shape(format!(
            "batch has {} columns, model expects {}",
            batch.ncols(),
            params.config.input_dim
        )));
    }
    if batch.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("batch contains non-finite values".into()));
    }
    let l = &params.layers;
    let z1 = batch.dot(&l[0].weights) + &l[0].bias;
    let a1 = z1.mapv(relu);
    let z2 = a1.dot(&l[1].weights) + &l[1].bias;
    let a2 = z2.mapv(relu);
    let z3 = a2.dot(&l[2].weights) + &l[2].bias;
    let probs = z3.index_axis(Axis(1), 0).mapv(sigmoid);
    Ok(ForwardCache {
        z1,
        a1,
        z2,
        a2,
        probs,
    })
}

/// Forward pass over a batch: ReLU, ReLU, sigmoid. Every output lies strictly
/// inside `(0, 1)`.
pub fn forward(params: &ModelParams, batch: &Array2<f64>) -> Result<Array1<f64>> {
    Ok(forward_cached(params, batch)?.probs)
}

/// Mean binary cross-entropy. Probabilities are clamped to
/// `[PROB_CLAMP, 1 - PROB_CLAMP]` before the logs.
pub fn bce_loss(probabilities: &Array1<f64>, labels: &Array1<f64>) -> Result<f64> {
    if probabilities.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} probabilities vs {} labels",
            probabilities.len(),
            labels.len()
        )));
    }
    if labels.iter().any(|&y| y != 0.0 && y != 1.0) {
        return Err(Error::Data("labels must be 0 or 1".into()));
    }
    if probabilities.is_empty() {
        return Err(Error::Data("empty probability vector".into()));
    }
    let n = probabilities.len() as f64;
    let sum: f64 = probabilities
        .iter()
        .zip(labels.iter())
        .map(|(&p, &y)| {
            let q = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            -(y * q.ln() + (1.0 - y) * (1.0 - q).ln())
        })
        .sum();
    Ok(sum / n)
}

/// Loss and analytic gradients of the mean clamped BCE over a batch.
///
/// Where the probability clamp is active the loss is locally constant, so the
/// gradient contribution of that sample is zero; this keeps the analytic
/// gradients consistent with finite differences of `bce_loss`.
pub fn backward(
    params: &ModelParams,
    batch: &Array2<f64>,
    labels: &Array1<f64>,
) -> Result<(f64, Gradients)> {
    let cache = forward_cached(params, batch)?;
    if labels.len() != batch.nrows() {
        return Err(Error::Shape(format!(
            "{} rows vs {} labels",
            batch.nrows(),
            labels.len()
        )));
    }
    let loss = bce_loss(&cache.probs, labels)?;

    let n = batch.nrows() as f64;
    // dL/dz3 = (p - y)/n inside the clamp interval, 0 where the clamp binds.
    let mut dz3 = Array2::zeros((batch.nrows(), 1));
    for (i, (&p, &y)) in cache.probs.iter().zip(labels.iter()).enumerate() {
        if p > PROB_CLAMP && p < 1.0 - PROB_CLAMP {
            dz3[(i, 0)] = (p - y) / n;
        }
    }

    let l = &params.layers;
    let grad_w3 = cache.a2.t().dot(&dz3);
    let grad_b3 = dz3.sum_axis(Axis(0));

    let da2 = dz3.dot(&l[2].weights.t());
    let dz2 = &da2 * &cache.z2.mapv(|z| if z > 0.0 { 1.0 } else { 0.0 });
    let grad_w2 = cache.a1.t().dot(&dz2);
    let grad_b2 = dz2.sum_axis(Axis(0));

    let da1 = dz2.dot(&l[1].weights.t());
    let dz1 = &da1 * &cache.z1.mapv(|z| if z > 0.0 { 1.0 } else { 0.0 });
    let grad_w1 = batch.t().dot(&dz1);
    let grad_b1 = dz1.sum_axis(Axis(0));

    let grads = Gradients {
        layers: vec![
            Layer {
                weights: grad_w1,
                bias: grad_b1,
            },
            Layer {
                weights: grad_w2,
                bias: grad_b2,
            },
            Layer {
                weights: grad_w3,
                bias: grad_b3,
            },
        ],
    };
    Ok((loss, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr1, arr2, array};

    fn tiny_config() -> ModelConfig {
        ModelConfig::new(4, 42)
    }

    #[test]
    fn init_produces_documented_shapes() {
        let params = init_model(&tiny_config()).unwrap();
        assert_eq!(params.layers.len(), 3);
        assert_eq!(params.layers[0].weights.dim(), (4, 64));
        assert_eq!(params.layers[0].bias.len(), 64);
        assert_eq!(params.layers[1].weights.dim(), (64, 32));
        assert_eq!(params.layers[1].bias.len(), 32);
        assert_eq!(params.layers[2].weights.dim(), (32, 1));
        assert_eq!(params.layers[2].bias.len(), 1);
    }

    #[test]
    fn init_is_deterministic_and_biases_zero() {
        let a = init_model(&tiny_config()).unwrap();
        let b = init_model(&tiny_config()).unwrap();
        assert_eq!(a, b);
        for layer in &a.layers {
            assert!(layer.bias.iter().all(|&v| v == 0.0));
        }
        let c = init_model(&ModelConfig::new(4, 43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn init_respects_xavier_bounds() {
        let params = init_model(&tiny_config()).unwrap();
        for (layer, (fan_in, fan_out)) in params.layers.iter().zip(tiny_config().layer_shapes()) {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            assert!(layer.weights.iter().all(|&w| w.abs() <= limit));
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(ModelConfig::new(0, 1).validate().is_err());
        let mut cfg = ModelConfig::new(4, 1);
        cfg.output = 2;
        assert!(cfg.validate().is_err());
        assert!(ModelConfig::new(3, 1).with_hidden(0, 5).validate().is_err());
    }

    #[test]
    fn zero_params_predict_half() {
        let cfg = tiny_config();
        let params = ModelParams {
            config: cfg,
            layers: cfg
                .layer_shapes()
                .iter()
                .map(|&(i, o)| Layer::zeros(i, o))
                .collect(),
        };
        let batch = arr2(&[[1.0, -2.0, 3.0, 0.5], [0.0, 0.0, 0.0, 0.0], [9.0; 4]]);
        let probs = forward(&params, &batch).unwrap();
        assert_eq!(probs.len(), 3);
        for &p in probs.iter() {
            assert_eq!(p, 0.5);
        }
    }

    #[test]
    fn hand_built_chain_matches_manual_value() {
        // 1-1-1-1 net, all weights 1, biases 0:
        // sigmoid(relu(relu(1))) = sigmoid(1) = 1/(1+e^-1).
        let cfg = ModelConfig::new(1, 0).with_hidden(1, 1);
        let params = ModelParams {
            config: cfg,
            layers: (0..3)
                .map(|_| Layer {
                    weights: arr2(&[[1.0]]),
                    bias: arr1(&[0.0]),
                })
                .collect(),
        };
        let probs = forward(&params, &arr2(&[[1.0]])).unwrap();
        let expected = 1.0 / (1.0 + (-1.0f64).exp());
        assert!((probs[0] - expected).abs() < 1e-15);
        assert!((probs[0] - 0.7310585786300049).abs() < 1e-15);
    }

    #[test]
    fn forward_rejects_shape_mismatch() {
        let params = init_model(&tiny_config()).unwrap();
        let bad = Array2::<f64>::zeros((2, 3));
        assert!(matches!(forward(&params, &bad), Err(Error::Shape(_))));
    }

    #[test]
    fn forward_outputs_stay_in_open_interval_under_extreme_logits() {
        let cfg = ModelConfig::new(1, 0).with_hidden(1, 1);
        let params = ModelParams {
            config: cfg,
            layers: (0..3)
                .map(|_| Layer {
                    weights: arr2(&[[1000.0]]),
                    bias: arr1(&[0.0]),
                })
                .collect(),
        };
        let p = forward(&params, &arr2(&[[1000.0]])).unwrap()[0];
        assert!(p < 1.0 && p > 0.0);
        let q = forward(&params, &arr2(&[[-1000.0]])).unwrap()[0];
        assert!(q > 0.0 && q < 1.0);
    }

    #[test]
    fn bce_matches_closed_forms() {
        let l = bce_loss(&arr1(&[0.5]), &arr1(&[1.0])).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-12);

        let l = bce_loss(&arr1(&[1.0 - 1e-12]), &arr1(&[1.0])).unwrap();
        assert!(l >= 0.0 && l < 1e-9);

        let l = bce_loss(&arr1(&[0.9, 0.1]), &arr1(&[1.0, 0.0])).unwrap();
        assert!((l - 0.10536051565782628).abs() < 1e-12);
    }

    #[test]
    fn bce_rejects_mismatch_and_bad_labels() {
        assert!(bce_loss(&arr1(&[0.5, 0.5]), &arr1(&[1.0])).is_err());
        assert!(bce_loss(&arr1(&[0.5]), &arr1(&[0.3])).is_err());
    }

    #[test]
    fn duplicated_rows_leave_gradients_unchanged() {
        let params = init_model(&tiny_config()).unwrap();
        let row = array![[0.3, -1.2, 0.7, 2.0]];
        let dup = arr2(&[[0.3, -1.2, 0.7, 2.0]; 4]);
        let (_, g1) = backward(&params, &row, &arr1(&[1.0])).unwrap();
        let (_, g4) = backward(&params, &dup, &arr1(&[1.0, 1.0, 1.0, 1.0])).unwrap();
        for (a, b) in g1.layers.iter().zip(g4.layers.iter()) {
            for (x, y) in a.weights.iter().zip(b.weights.iter()) {
                assert!((x - y).abs() < 1e-15);
            }
            for (x, y) in a.bias.iter().zip(b.bias.iter()) {
                assert!((x - y).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn backward_loss_equals_bce_of_forward() {
        let params = init_model(&tiny_config()).unwrap();
        let batch = arr2(&[[0.1, 0.2, 0.3, 0.4], [-1.0, 0.5, 2.0, -0.3]]);
        let labels = arr1(&[1.0, 0.0]);
        let (loss, _) = backward(&params, &batch, &labels).unwrap();
        let probs = forward(&params, &batch).unwrap();
        let direct = bce_loss(&probs, &labels).unwrap();
        assert_eq!(loss, direct);
    }

    #[test]
    fn validate_catches_nan_and_shape_drift() {
        let mut params = init_model(&tiny_config()).unwrap();
        assert!(params.validate().is_ok());
        params.layers[1].weights[(0, 0)] = f64::NAN;
        assert!(params.validate().is_err());

        let mut short = init_model(&tiny_config()).unwrap();
        short.layers.pop();
        assert!(short.validate().is_err());
    }
}
