//! Task recognition for an instrumented rotary power tool.
//!
//! The crate covers the whole offline pipeline: run CSV ingestion and outlier
//! cleaning ([`ingest`]), 10 s / 50 % windows reduced to 110 statistics
//! ([`features`]), a synthetic robot/human signal generator ([`synth`]), a
//! small MLP with checkpointing and fine-tuning ([`model`]), and the
//! pretrain-on-robot experiments ([`eval`]).
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root pin the `f64` instantiations the pipeline uses.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod scalar;
pub mod seed;
pub mod stats;
pub mod synth;

pub use data::{
    feature_index, ChannelId, RunKey, SensorRun, SensorSample, Source, SplitMode, SplitSpec, Statistic, TaskLabel,
    Window, NUM_CHANNELS, NUM_CLASSES, NUM_FEATURES, NUM_STATS,
};
pub use error::{Error, Result};
pub use scalar::Scalar;

/// Scalar used by the pipeline and CLI.
pub type Real = f64;
pub type FeatureVec = data::FeatureVector<Real>;
pub type FeatureVec32 = data::FeatureVector<f32>;
pub type Normalization = features::NormalizationParams<Real>;
pub type Normalization32 = features::NormalizationParams<f32>;
pub type Row = features::FeatureRow<Real>;
pub type Profile = synth::MotionProfile<Real>;
pub type Mlp = model::MlpParams<Real>;
pub type Mlp32 = model::MlpParams<f32>;
pub type Checkpoint = model::Checkpoint<Real>;
