//! Training loop: minibatch noise-prediction with adaptive moments, early
//! stopping on a validation holdout carved from the training split, and full
//! determinism under the config seed.

use super::adam::Adam;
use super::encoder::{encode_condition, fit_encoder, ConditionEncoder};
use super::loss::{loss_and_grads, loss_only, sample_draws, LossDraws};
use super::net::{Denoiser, TARGET_DIM};
use super::schedule::NoiseSchedule;
use super::transform::TargetTransform;
use super::DdpmError;
use crate::seed::rng_for;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    /// Diffusion steps T.
    pub steps: usize,
    pub beta_min: f64,
    pub beta_max: f64,
    pub hidden: Vec<usize>,
    pub t_embed_dim: usize,
    /// Spectral principal components in the condition vector.
    pub pca_components: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            steps: 200,
            beta_min: 1e-4,
            // 0.02 would leave alpha_bar_T ~= 0.13 at T = 200; 0.05 puts the
            // terminal state within 1% of pure noise.
            beta_max: 0.05,
            hidden: vec![128, 128],
            t_embed_dim: 8,
            pca_components: 8,
            batch_size: 64,
            learning_rate: 1e-3,
            max_epochs: 150,
            patience: 15,
            validation_fraction: 0.1,
            seed: 42,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), DdpmError> {
        let bad = |msg: &str| Err(DdpmError::InvalidConfig(msg.to_string()));
        if self.steps == 0 {
            return bad("steps must be positive");
        }
        if !(self.beta_min > 0.0 && self.beta_max < 1.0 && self.beta_min <= self.beta_max) {
            return bad("beta range must satisfy 0 < beta_min <= beta_max < 1");
        }
        if self.hidden.is_empty() || self.hidden.iter().any(|&h| h == 0) {
            return bad("hidden sizes must be positive");
        }
        if self.t_embed_dim < 2 || self.t_embed_dim % 2 != 0 {
            return bad("t_embed_dim must be even and at least 2");
        }
        if self.pca_components == 0 || self.pca_components > super::encoder::MAX_COMPONENTS {
            return bad("pca_components must be in 1..=32");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be positive");
        }
        if self.patience >= self.max_epochs {
            return bad("patience must be smaller than max_epochs");
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 0.5) {
            return bad("validation_fraction must be in (0, 0.5)");
        }
        let schedule = NoiseSchedule::linear(self.steps, self.beta_min, self.beta_max)?;
        if !schedule.terminal_bounds_ok() {
            return Err(DdpmError::InvalidSchedule(format!(
                "terminal bounds violated: alpha_bar_1 = {:.4}, alpha_bar_T = {:.4} \
                 (need > 0.9 and < 0.01)",
                schedule.alpha_bar[0],
                schedule.alpha_bar.last().unwrap()
            )));
        }
        Ok(())
    }

    pub fn schedule(&self) -> Result<NoiseSchedule, DdpmError> {
        NoiseSchedule::linear(self.steps, self.beta_min, self.beta_max)
    }
}

/// One training example in original units.
#[derive(Debug, Clone)]
pub struct TrainSample {
    pub rrs: Vec<f64>,
    pub salinity_psu: f64,
    /// (nitrate mg/L, TSS mg/L, CDOM at 440 nm 1/m)
    pub targets: [f64; TARGET_DIM],
}

/// Everything inference needs, fitted exclusively on the training split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedModel {
    pub denoiser: Denoiser,
    pub schedule: NoiseSchedule,
    pub encoder: ConditionEncoder,
    pub transform: TargetTransform,
    pub config: TrainingConfig,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

/// Train on the given samples (the caller passes the training split only).
pub fn train(
    samples: &[TrainSample],
    config: &TrainingConfig,
) -> Result<(TrainedModel, Vec<EpochStats>), DdpmError> {
    config.validate()?;
    let min_needed = (config.pca_components + 1).max(10);
    if samples.len() < min_needed {
        return Err(DdpmError::TooFewSamples {
            need: min_needed,
            got: samples.len(),
        });
    }

    let spectra: Vec<Vec<f64>> = samples.iter().map(|s| s.rrs.clone()).collect();
    let salinity: Vec<f64> = samples.iter().map(|s| s.salinity_psu).collect();
    let targets_raw: Vec<[f64; TARGET_DIM]> = samples.iter().map(|s| s.targets).collect();

    let transform = TargetTransform::fit(&targets_raw);
    let encoder = fit_encoder(&spectra, &salinity, config.pca_components)?;
    let schedule = config.schedule()?;

    let conditions: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| encode_condition(&encoder, &s.rrs, s.salinity_psu))
        .collect::<Result<_, _>>()?;
    let targets: Vec<[f64; TARGET_DIM]> =
        targets_raw.iter().map(|&t| transform.standardize(t)).collect();

    // validation holdout from the training split, never the test split
    let mut indices: Vec<usize> = (0..samples.len()).collect();
    indices.shuffle(&mut rng_for(config.seed, "train/val-split"));
    let n_val = ((samples.len() as f64 * config.validation_fraction).round() as usize)
        .clamp(1, samples.len() - 1);
    let val_idx: Vec<usize> = indices[..n_val].to_vec();
    let mut train_idx: Vec<usize> = indices[n_val..].to_vec();

    // fixed validation draws so epochs are comparable and runs reproducible
    let mut val_rng = rng_for(config.seed, "train/val-noise");
    let val_draws = sample_draws(val_idx.len(), &schedule, &mut val_rng);
    let val_conditions: Vec<&[f64]> = val_idx.iter().map(|&i| conditions[i].as_slice()).collect();
    let val_targets: Vec<[f64; TARGET_DIM]> = val_idx.iter().map(|&i| targets[i]).collect();

    let mut model = Denoiser::new(
        &config.hidden,
        config.t_embed_dim,
        encoder.condition_dim(),
        &mut rng_for(config.seed, "train/init"),
    );
    let mut adam = Adam::new(&model, config.learning_rate);
    let mut shuffle_rng = rng_for(config.seed, "train/shuffle");
    let mut noise_rng = rng_for(config.seed, "train/noise");

    let mut history = Vec::with_capacity(config.max_epochs);
    let mut best_val = f64::INFINITY;
    let mut best_weights = model.clone();
    let mut stale_epochs = 0usize;

    for epoch in 0..config.max_epochs {
        train_idx.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        let mut seen = 0usize;
        for chunk in train_idx.chunks(config.batch_size) {
            let batch_conditions: Vec<&[f64]> =
                chunk.iter().map(|&i| conditions[i].as_slice()).collect();
            let batch_targets: Vec<[f64; TARGET_DIM]> = chunk.iter().map(|&i| targets[i]).collect();
            let draws: LossDraws = sample_draws(chunk.len(), &schedule, &mut noise_rng);
            let (loss, grads) =
                loss_and_grads(&model, &schedule, &batch_conditions, &batch_targets, &draws);
            if !loss.is_finite() {
                return Err(DdpmError::DivergenceDetected { epoch });
            }
            adam.step(&mut model, &grads);
            epoch_loss += loss * chunk.len() as f64;
            seen += chunk.len();
        }
        let train_loss = epoch_loss / seen as f64;
        let val_loss = loss_only(&model, &schedule, &val_conditions, &val_targets, &val_draws);
        if !val_loss.is_finite() {
            return Err(DdpmError::DivergenceDetected { epoch });
        }
        history.push(EpochStats {
            epoch,
            train_loss,
            val_loss,
        });
        if val_loss < best_val - 1e-12 {
            best_val = val_loss;
            best_weights = model.clone();
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= config.patience {
                break;
            }
        }
    }

    Ok((
        TrainedModel {
            denoiser: best_weights,
            schedule,
            encoder,
            transform,
            config: config.clone(),
        },
        history,
    ))
}
