//! From-scratch MLP classifier, deterministic training and checkpoints.

mod checkpoint;
mod mlp;
mod train;

pub use checkpoint::{
    data_fingerprint, load_checkpoint, save_checkpoint, Checkpoint, Provenance, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use mlp::{argmax, log_sum_exp, softmax, MlpParams, Sample};
pub use train::{train, EpochLog, Init, TrainConfig, TrainLog};
