use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{MlpParams, Sample};
use crate::data::{NUM_CLASSES, NUM_FEATURES};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Multiplier on `learning_rate` when starting from a checkpoint.
    pub fine_tune_lr_scale: f64,
    pub momentum: f64,
    /// Epochs without a validation improvement before stopping.
    pub patience: usize,
    pub hidden: Vec<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 150,
            batch_size: 32,
            learning_rate: 0.01,
            fine_tune_lr_scale: 0.1,
            momentum: 0.9,
            patience: 20,
            hidden: vec![64, 32],
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        for (name, v) in [
            ("learning_rate", self.learning_rate),
            ("fine_tune_lr_scale", self.fine_tune_lr_scale),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        Ok(())
    }

    /// Full layer chain for the feature input and class output.
    pub fn layer_dims(&self) -> Vec<usize> {
        std::iter::once(NUM_FEATURES)
            .chain(self.hidden.iter().copied())
            .chain(std::iter::once(NUM_CLASSES))
            .collect()
    }
}

/// Starting point of a training run.
#[derive(Debug, Clone)]
pub enum Init<T: Scalar> {
    /// Glorot init with `dims`, seeded from the config seed.
    Random { dims: Vec<usize> },
    /// Continue from existing parameters at the fine-tuning learning rate.
    FromCheckpoint(MlpParams<T>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub learning_rate: f64,
    /// Validation accuracy of the initial parameters.
    pub initial_val_accuracy: f64,
    pub epochs: Vec<EpochLog>,
    /// 0 means the initial parameters were never beaten.
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
    pub stopped_early: bool,
}

fn check_set<T: Scalar>(name: &str, set: &[Sample<T>], params: &MlpParams<T>) -> Result<()> {
    if set.is_empty() {
        return Err(Error::Contract(format!("{name} set is empty")));
    }
    for (i, s) in set.iter().enumerate() {
        if s.label >= params.output_dim() {
            return Err(Error::Contract(format!(
                "{name} sample {i} has label {} out of range",
                s.label
            )));
        }
        if s.x.len() != params.input_dim() {
            return Err(Error::Contract(format!(
                "{name} sample {i} has {} features, model expects {}",
                s.x.len(),
                params.input_dim()
            )));
        }
    }
    Ok(())
}

fn mean_loss<T: Scalar>(params: &MlpParams<T>, set: &[Sample<T>]) -> Result<f64> {
    let batch: Vec<(&[T], usize)> = set.iter().map(|s| (s.x.as_slice(), s.label)).collect();
    Ok(params.loss(&batch)?.as_f64())
}

/// Mini-batch SGD with momentum on mean cross-entropy.
///
/// The sample order of every epoch comes from a stream seeded by
/// `config.seed`, so identical inputs give identical parameters. Returns the
/// parameters with the best validation accuracy seen, counting the initial
/// ones; the latest epoch wins ties, so a plateau keeps the most trained
/// parameters. Training stops once `patience` epochs pass without a strict
/// improvement.
pub fn train<T: Scalar>(
    train_set: &[Sample<T>],
    val_set: &[Sample<T>],
    config: &TrainConfig,
    init: Init<T>,
) -> Result<(MlpParams<T>, TrainLog)> {
    config.validate()?;
    let (mut params, lr) = match init {
        Init::Random { dims } => (
            MlpParams::glorot(&dims, derive_seed(config.seed, "init"))?,
            config.learning_rate,
        ),
        Init::FromCheckpoint(p) => {
            p.validate()?;
            (p, config.learning_rate * config.fine_tune_lr_scale)
        }
    };
    check_set("training", train_set, &params)?;
    check_set("validation", val_set, &params)?;

    let lr_t = T::of(lr);
    let mu = T::of(config.momentum);
    let mut velocity = MlpParams::<T>::zeros(params.dims())?;
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "shuffle"));

    let initial = params.accuracy(val_set)?;
    let mut best = (initial, params.clone(), 0usize);
    let mut improved_at = 0usize;
    let mut log = TrainLog {
        learning_rate: lr,
        initial_val_accuracy: initial,
        epochs: Vec::with_capacity(config.epochs),
        best_epoch: 0,
        best_val_accuracy: initial,
        stopped_early: false,
    };
    let mut last_finite = f64::NAN;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<(&[T], usize)> = chunk
                .iter()
                .map(|&i| (train_set[i].x.as_slice(), train_set[i].label))
                .collect();
            let (loss, grad) = params.loss_and_grad(&batch)?;
            let loss = loss.as_f64();
            if !loss.is_finite() {
                return Err(Error::Training {
                    epoch,
                    last_finite_loss: last_finite,
                });
            }
            last_finite = loss;
            loss_sum += loss * chunk.len() as f64;
            for ((p, v), g) in params.tensors_mut().zip(velocity.tensors_mut()).zip(grad.tensors()) {
                for ((pi, vi), &gi) in p.iter_mut().zip(v.iter_mut()).zip(g) {
                    *vi = mu * *vi - lr_t * gi;
                    *pi += *vi;
                }
            }
        }
        if params.tensors().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Training {
                epoch,
                last_finite_loss: last_finite,
            });
        }
        let val_accuracy = params.accuracy(val_set)?;
        let val_loss = mean_loss(&params, val_set)?;
        log.epochs.push(EpochLog {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            val_accuracy,
            val_loss,
        });
        if val_accuracy > best.0 {
            improved_at = epoch;
        }
        if val_accuracy >= best.0 {
            best = (val_accuracy, params.clone(), epoch);
        }
        if epoch - improved_at >= config.patience {
            log.stopped_early = true;
            break;
        }
    }
    log.best_epoch = best.2;
    log.best_val_accuracy = best.0;
    Ok((best.1, log))
}
