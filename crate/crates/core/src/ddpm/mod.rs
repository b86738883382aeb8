//! Conditional denoising diffusion over the (nitrate, TSS, CDOM) target
//! vector, conditioned on encoded (reflectance, salinity).
//!
//! Everything numerical is hand-written: the feed-forward noise predictor and
//! its reverse-mode gradients, the adaptive-moment optimizer, the training
//! loop, and ancestral sampling. The only borrowed numerics is the symmetric
//! eigendecomposition behind the PCA condition encoder.

mod adam;
mod checkpoint;
mod encoder;
mod loss;
mod net;
mod sample;
mod schedule;
mod train;
mod transform;

pub use adam::Adam;
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use encoder::{encode_condition, fit_encoder, ConditionEncoder};
pub use loss::{loss_and_grads, loss_only, sample_draws, LossDraws};
pub use net::{Dense, Denoiser, Grads, TARGET_DIM};
pub use sample::{predict_point, reverse_from, sample, sample_standardized, PointPrediction};
pub use schedule::{forward_noise, invert_forward_noise, NoiseSchedule};
pub use train::{train, EpochStats, TrainSample, TrainedModel, TrainingConfig};
pub use transform::TargetTransform;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DdpmError {
    #[error("diffusion step {t} outside 1..={steps}")]
    StepOutOfRange { t: usize, steps: usize },
    #[error("invalid noise schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    DivergenceDetected { epoch: usize },
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("checkpoint integrity: {0}")]
    Integrity(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
