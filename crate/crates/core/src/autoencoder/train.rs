use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::MlpModel;
use crate::error::{Result, SrmError};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 24,
            learning_rate: 0.08,
            momentum: 0.9,
            epochs: 100,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(SrmError::InvalidInput("batch size must be positive".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(SrmError::InvalidInput(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(SrmError::InvalidInput(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        Ok(())
    }
}

/// Heavy-ball momentum: `v ← μv − η∇L`, `w ← w + v`.
#[derive(Debug, Clone)]
pub struct MomentumSgd {
    pub learning_rate: f64,
    pub momentum: f64,
    velocity: Vec<f64>,
}

impl MomentumSgd {
    pub fn new(learning_rate: f64, momentum: f64, parameters: usize) -> Self {
        Self {
            learning_rate,
            momentum,
            velocity: vec![0.0; parameters],
        }
    }

    /// Updates `params` in place. `offset` addresses this slice within the
    /// optimiser's flat velocity buffer.
    pub fn step(&mut self, offset: usize, params: &mut [f64], grads: &[f64]) {
        let v = &mut self.velocity[offset..offset + params.len()];
        for ((w, vi), g) in params.iter_mut().zip(v.iter_mut()).zip(grads) {
            *vi = self.momentum * *vi - self.learning_rate * g;
            *w += *vi;
        }
    }
}

/// Mean squared error over every element, and its gradient.
pub fn mse(output: &DMatrix<f64>, target: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
    let diff = output - target;
    let count = diff.len() as f64;
    let loss = diff.norm_squared() / count;
    (loss, diff * (2.0 / count))
}

/// Per-epoch record of the mean minibatch loss.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean reconstruction loss of the untrained model over the dataset.
    pub initial_loss: f64,
    pub epoch_losses: Vec<f64>,
}

fn gather_rows(data: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), data.ncols(), |r, c| data[(idx[r], c)])
}

/// Reconstruction loss of `model` on `data`, evaluated in chunks.
pub fn evaluate_loss(model: &MlpModel, data: &DMatrix<f64>) -> Result<f64> {
    let chunk = 1000;
    let mut total = 0.0;
    let mut start = 0;
    while start < data.nrows() {
        let len = chunk.min(data.nrows() - start);
        let batch = data.rows(start, len).into_owned();
        let out = model.forward(&batch)?;
        total += (out.output() - &batch).norm_squared();
        start += len;
    }
    Ok(total / data.len() as f64)
}

/// Trains `model` to reconstruct `data` with minibatch momentum SGD.
///
/// Each epoch visits every sample once in a fresh seeded permutation; the
/// last minibatch may be short.
pub fn train(model: &mut MlpModel, data: &DMatrix<f64>, config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    if data.nrows() == 0 {
        return Err(SrmError::EmptyDataset);
    }
    if data.ncols() != model.input_dim() || model.output_dim() != model.input_dim() {
        return Err(SrmError::DimensionMismatch {
            expected: model.input_dim(),
            got: data.ncols(),
        });
    }

    let initial_loss = evaluate_loss(model, data)?;
    if !initial_loss.is_finite() {
        return Err(SrmError::DivergenceDetected {
            epoch: 0,
            loss: initial_loss,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut opt = MomentumSgd::new(config.learning_rate, config.momentum, model.parameter_count());
    let mut order: Vec<usize> = (0..data.nrows()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        let mut batches = 0usize;
        for idx in order.chunks(config.batch_size) {
            let batch = gather_rows(data, idx);
            let trace = model.forward(&batch)?;
            let (loss, d_out) = mse(trace.output(), &batch);
            if !loss.is_finite() {
                return Err(SrmError::DivergenceDetected { epoch, loss });
            }
            let grads = model.backward(&trace, &d_out);
            let mut offset = 0;
            for (k, layer) in model.layers.iter_mut().enumerate() {
                let w = layer.weight.as_mut_slice();
                opt.step(offset, w, grads.weight[k].as_slice());
                offset += w.len();
                let b = layer.bias.as_mut_slice();
                opt.step(offset, b, grads.bias[k].as_slice());
                offset += b.len();
            }
            sum += loss;
            batches += 1;
        }
        let mean = sum / batches as f64;
        if !mean.is_finite() {
            return Err(SrmError::DivergenceDetected { epoch, loss: mean });
        }
        epoch_losses.push(mean);
    }

    Ok(TrainReport {
        initial_loss,
        epoch_losses,
    })
}
