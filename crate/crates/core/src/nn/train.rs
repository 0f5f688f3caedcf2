//! Local minibatch training.

use super::{adam_step, backward, sgd_step, AdamState, ModelParams, Optimizer, TrainingConfig};
use crate::data::ProcessedDataset;
use crate::error::{Error, Result};
use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Runs `cfg.epochs` passes of minibatch updates over the dataset, starting
/// from `params`. Batches are drawn in a shuffle order seeded by
/// `cfg.shuffle_seed` (one generator, advanced across epochs). The final,
/// short minibatch is trained on rather than dropped. Returns the trained
/// parameters and the per-epoch mean loss.
///
/// Optimizer state (for Adam) is created fresh for this call, so repeated
/// calls with identical inputs are bit-identical.
pub fn train_local(
    params: &ModelParams,
    dataset: &ProcessedDataset,
    cfg: &TrainingConfig,
) -> Result<(ModelParams, Vec<f64>)> {
    cfg.validate()?;
    let n = dataset.n_rows();
    if n == 0 {
        return Err(Error::Data("cannot train on an empty dataset".into()));
    }
    if dataset.n_features() != params.config.input_dim {
        return Err(Error::Shape(format!(
            "dataset has {} features, model expects {}",
            dataset.n_features(),
            params.config.input_dim
        )));
    }

    let labels_f: Array1<f64> = dataset.labels.iter().map(|&y| y as f64).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.shuffle_seed);
    let mut order: Vec<usize> = (0..n).collect();

    let mut current = params.clone();
    let mut adam = AdamState::zeros(&current);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = select_rows(&dataset.features, chunk);
            let batch_labels: Array1<f64> = chunk.iter().map(|&i| labels_f[i]).collect();
            let (loss, grads) = backward(&current, &batch, &batch_labels)?;
            loss_sum += loss * chunk.len() as f64;
            match cfg.optimizer {
                Optimizer::Sgd => {
                    current = sgd_step(&current, &grads, cfg.learning_rate)?;
                }
                Optimizer::Adam => {
                    let (next, state) = adam_step(&current, &grads, &adam, cfg)?;
                    current = next;
                    adam = state;
                }
            }
        }
        epoch_losses.push(loss_sum / n as f64);
    }

    Ok((current, epoch_losses))
}

fn select_rows(features: &Array2<f64>, indices: &[usize]) -> Array2<f64> {
    features.select(Axis(0), indices)
}
