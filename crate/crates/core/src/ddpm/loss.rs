//! Noise-prediction objective: mean squared error between injected and
//! predicted noise, with exact reverse-mode parameter gradients.

use super::net::{Denoiser, Grads, TARGET_DIM};
use super::schedule::{forward_noise, NoiseSchedule};
use crate::seed::Rng;
use rand::Rng as _;
use rand_distr::StandardNormal;

/// Frozen stochastic draws for one batch: a uniform step and a standard
/// normal noise vector per element. Freezing them keeps the loss a pure
/// function of the parameters, which the finite-difference checks rely on.
#[derive(Debug, Clone)]
pub struct LossDraws {
    pub t: Vec<usize>,
    pub eps: Vec<[f64; TARGET_DIM]>,
}

pub fn sample_draws(batch: usize, schedule: &NoiseSchedule, rng: &mut Rng) -> LossDraws {
    let steps = schedule.steps();
    let t = (0..batch).map(|_| rng.random_range(1..=steps)).collect();
    let eps = (0..batch)
        .map(|_| {
            [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ]
        })
        .collect();
    LossDraws { t, eps }
}

fn assemble_inputs(
    model: &Denoiser,
    schedule: &NoiseSchedule,
    conditions: &[&[f64]],
    targets: &[[f64; TARGET_DIM]],
    draws: &LossDraws,
) -> Vec<f64> {
    let batch = targets.len();
    let input_dim = model.input_dim();
    let mut inputs = vec![0.0; batch * input_dim];
    let mut embedding = vec![0.0; model.t_embed_dim];
    for i in 0..batch {
        let x_t = forward_noise(&targets[i], draws.t[i], &draws.eps[i], schedule)
            .expect("draws are in range");
        let row = &mut inputs[i * input_dim..(i + 1) * input_dim];
        row[..TARGET_DIM].copy_from_slice(&x_t);
        model.time_embedding(draws.t[i], schedule.steps(), &mut embedding);
        row[TARGET_DIM..TARGET_DIM + model.t_embed_dim].copy_from_slice(&embedding);
        row[TARGET_DIM + model.t_embed_dim..].copy_from_slice(conditions[i]);
    }
    inputs
}

/// Batch-mean squared error between injected and predicted noise.
pub fn loss_only(
    model: &Denoiser,
    schedule: &NoiseSchedule,
    conditions: &[&[f64]],
    targets: &[[f64; TARGET_DIM]],
    draws: &LossDraws,
) -> f64 {
    let batch = targets.len();
    assert!(batch > 0, "empty batch");
    let inputs = assemble_inputs(model, schedule, conditions, targets, draws);
    let predicted = model.forward(&inputs, batch);
    mse(&draws.eps, &predicted)
}

/// Loss plus exact gradients w.r.t. every parameter.
pub fn loss_and_grads(
    model: &Denoiser,
    schedule: &NoiseSchedule,
    conditions: &[&[f64]],
    targets: &[[f64; TARGET_DIM]],
    draws: &LossDraws,
) -> (f64, Grads) {
    let batch = targets.len();
    assert!(batch > 0, "empty batch");
    let inputs = assemble_inputs(model, schedule, conditions, targets, draws);
    let cache = model.forward_cached(&inputs, batch);
    let loss = mse(&draws.eps, &cache.output);

    // d loss / d eps_hat = 2 (eps_hat - eps) / batch
    let mut d_output = vec![0.0; batch * TARGET_DIM];
    for i in 0..batch {
        for d in 0..TARGET_DIM {
            d_output[i * TARGET_DIM + d] =
                2.0 * (cache.output[i * TARGET_DIM + d] - draws.eps[i][d]) / batch as f64;
        }
    }
    let mut grads = Grads::zeros_like(model);
    model.backward(&cache, &d_output, &mut grads);
    (loss, grads)
}

fn mse(eps: &[[f64; TARGET_DIM]], predicted: &[f64]) -> f64 {
    let batch = eps.len();
    let mut total = 0.0;
    for i in 0..batch {
        for d in 0..TARGET_DIM {
            let r = eps[i][d] - predicted[i * TARGET_DIM + d];
            total += r * r;
        }
    }
    total / batch as f64
}
