use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HnnModel;
use crate::encoder::EncodedMicroTable;
use crate::error::{Error, Result};
use crate::optim::Adam;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Batch order. Initialization uses the seed given to `HnnModel::new`.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 32,
            epochs: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// mean training loss of each epoch
    pub loss_curve: Vec<f64>,
}

/// Adam on softmax cross-entropy with seeded shuffling per epoch.
pub fn train(
    model: &mut HnnModel,
    samples: &[(EncodedMicroTable, usize)],
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    if samples.is_empty() {
        return Err(Error::Config("no training samples".into()));
    }
    let batch_size = cfg.batch_size.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(cfg.learning_rate);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut loss_curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(batch_size) {
            let batch: Vec<(&EncodedMicroTable, usize)> =
                chunk.iter().map(|&i| (&samples[i].0, samples[i].1)).collect();
            let (loss, grad) = model.loss_and_gradients(&batch)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, loss });
            }
            total += loss * chunk.len() as f64;
            let grads: Vec<&[f64]> = grad.tensors().into_iter().map(|t| t.data).collect();
            adam.step(model.params_mut().tensors_mut(), grads);
        }
        let mean = total / samples.len() as f64;
        log::debug!("epoch {epoch}: loss {mean:.6}");
        loss_curve.push(mean);
    }
    Ok(TrainReport { loss_curve })
}
