//! Ancestral sampling from the learned reverse process, and the posterior
//! mean/std point estimate built on top of it.

use super::net::{Denoiser, TARGET_DIM};
use super::schedule::NoiseSchedule;
use super::train::TrainedModel;
use crate::seed::Rng;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Run the reverse chain from the supplied terminal states down to x0, all in
/// standardized target space. `draws` evolve in place; one forward pass per
/// step covers the whole batch of draws.
///
/// `deterministic` forces every sigma_t to zero, which makes the chain a pure
/// function of the terminal states.
pub fn reverse_from(
    denoiser: &Denoiser,
    schedule: &NoiseSchedule,
    condition: &[f64],
    mut draws: Vec<[f64; TARGET_DIM]>,
    rng: &mut Rng,
    deterministic: bool,
) -> Vec<[f64; TARGET_DIM]> {
    let k = draws.len();
    let input_dim = denoiser.input_dim();
    let mut inputs = vec![0.0; k * input_dim];
    let mut embedding = vec![0.0; denoiser.t_embed_dim];
    for t in (1..=schedule.steps()).rev() {
        denoiser.time_embedding(t, schedule.steps(), &mut embedding);
        for (i, x) in draws.iter().enumerate() {
            let row = &mut inputs[i * input_dim..(i + 1) * input_dim];
            row[..TARGET_DIM].copy_from_slice(x);
            row[TARGET_DIM..TARGET_DIM + denoiser.t_embed_dim].copy_from_slice(&embedding);
            row[TARGET_DIM + denoiser.t_embed_dim..].copy_from_slice(condition);
        }
        let eps_hat = denoiser.forward(&inputs, k);

        let alpha = schedule.alpha_at(t);
        let abar = schedule.alpha_bar_at(t);
        let mean_scale = 1.0 / alpha.sqrt();
        let eps_scale = (1.0 - alpha) / (1.0 - abar).sqrt();
        let sigma = if deterministic { 0.0 } else { schedule.sigma_at(t) };
        for (i, x) in draws.iter_mut().enumerate() {
            for d in 0..TARGET_DIM {
                let mean = mean_scale * (x[d] - eps_scale * eps_hat[i * TARGET_DIM + d]);
                x[d] = if sigma > 0.0 {
                    mean + sigma * rng.sample::<f64, _>(StandardNormal)
                } else {
                    mean
                };
            }
        }
    }
    draws
}

/// K ancestral draws in standardized space, starting from standard normal
/// terminal states.
pub fn sample_standardized(
    denoiser: &Denoiser,
    schedule: &NoiseSchedule,
    condition: &[f64],
    k: usize,
    rng: &mut Rng,
) -> Vec<[f64; TARGET_DIM]> {
    let start: Vec<[f64; TARGET_DIM]> = (0..k)
        .map(|_| {
            [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ]
        })
        .collect();
    reverse_from(denoiser, schedule, condition, start, rng, false)
}

/// K draws from the conditional target distribution, in original units.
pub fn sample(
    model: &TrainedModel,
    condition: &[f64],
    k: usize,
    rng: &mut Rng,
) -> Vec<[f64; TARGET_DIM]> {
    sample_standardized(&model.denoiser, &model.schedule, condition, k, rng)
        .into_iter()
        .map(|z| model.transform.restore(z))
        .collect()
}

/// Component-wise mean and spread of `k` draws, in original units.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PointPrediction {
    pub mean: [f64; TARGET_DIM],
    pub std: [f64; TARGET_DIM],
    /// True when k = 1 left the spread undefined (reported as zero).
    pub std_degenerate: bool,
}

pub fn predict_point(
    model: &TrainedModel,
    condition: &[f64],
    k: usize,
    rng: &mut Rng,
) -> PointPrediction {
    assert!(k > 0, "need at least one draw");
    let draws = sample(model, condition, k, rng);
    let mut mean = [0.0; TARGET_DIM];
    for draw in &draws {
        for d in 0..TARGET_DIM {
            mean[d] += draw[d];
        }
    }
    for m in mean.iter_mut() {
        *m /= k as f64;
    }
    let mut std = [0.0; TARGET_DIM];
    let std_degenerate = k == 1;
    if !std_degenerate {
        for draw in &draws {
            for d in 0..TARGET_DIM {
                std[d] += (draw[d] - mean[d]).powi(2);
            }
        }
        for s in std.iter_mut() {
            *s = (*s / (k - 1) as f64).sqrt();
        }
    }
    PointPrediction {
        mean,
        std,
        std_degenerate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ddpm::train::{train, TrainSample, TrainingConfig};
    use crate::seed::rng_for;

    fn zeroed_net(cond_dim: usize) -> Denoiser {
        let mut rng = rng_for(3, "test/sample-net");
        let mut net = Denoiser::new(&[8], 4, cond_dim, &mut rng);
        let last = net.layers.len() - 1;
        net.layers[last].weights.iter_mut().for_each(|w| *w = 0.0);
        net.layers[last].bias.iter_mut().for_each(|b| *b = 0.0);
        net
    }

    #[test]
    fn single_step_zero_predictor_closed_form() {
        // T = 1 and eps_hat = 0: x0 = x_1 / sqrt(alpha_1)
        let net = zeroed_net(2);
        let schedule = NoiseSchedule::from_betas(vec![0.36]).unwrap();
        let x1 = [0.8, -0.4, 0.2];
        let mut rng = rng_for(5, "test/sample");
        let out = reverse_from(&net, &schedule, &[0.0, 0.0], vec![x1], &mut rng, false);
        let expected_scale = 1.0 / (1.0 - 0.36f64).sqrt();
        for d in 0..TARGET_DIM {
            assert!((out[0][d] - x1[d] * expected_scale).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_mode_is_a_pure_function_of_x_t() {
        let net = zeroed_net(2);
        let schedule = NoiseSchedule::linear(30, 1e-3, 0.3).unwrap();
        let x_t = vec![[1.0, -1.0, 0.5], [0.2, 0.0, -0.7]];
        let mut rng_a = rng_for(9, "a");
        let mut rng_b = rng_for(1234, "b");
        let a = reverse_from(&net, &schedule, &[0.1, 0.2], x_t.clone(), &mut rng_a, true);
        let b = reverse_from(&net, &schedule, &[0.1, 0.2], x_t, &mut rng_b, true);
        assert_eq!(a, b, "sigma = 0 must ignore the rng entirely");
    }

    #[test]
    fn smoke_statistics_are_finite() {
        let net = zeroed_net(3);
        let schedule = NoiseSchedule::linear(50, 1e-3, 0.2).unwrap();
        let mut rng = rng_for(2, "test/smoke");
        let draws = sample_standardized(&net, &schedule, &[0.0, 0.5, -0.5], 1000, &mut rng);
        assert_eq!(draws.len(), 1000);
        let mut mean = [0.0; 3];
        let mut second = [0.0; 3];
        for d in &draws {
            for i in 0..3 {
                assert!(d[i].is_finite());
                mean[i] += d[i] / 1000.0;
                second[i] += d[i] * d[i] / 1000.0;
            }
        }
        for i in 0..3 {
            let std = (second[i] - mean[i] * mean[i]).sqrt();
            assert!(mean[i].is_finite() && std.is_finite() && std > 0.0);
        }
    }

    #[test]
    fn point_prediction_handles_single_draw() {
        let samples: Vec<TrainSample> = (0..40)
            .map(|i| {
                let f = i as f64 / 39.0;
                TrainSample {
                    rrs: vec![0.01 + 0.01 * f; 5],
                    salinity_psu: 30.0 * f,
                    targets: [0.2 - 0.1 * f, 10.0, 1.0],
                }
            })
            .collect();
        let cfg = TrainingConfig {
            steps: 10,
            beta_min: 0.05,
            beta_max: 0.8,
            hidden: vec![8],
            t_embed_dim: 4,
            pca_components: 1,
            batch_size: 8,
            learning_rate: 1e-2,
            max_epochs: 3,
            patience: 2,
            validation_fraction: 0.2,
            seed: 7,
        };
        let (model, _) = train(&samples, &cfg).unwrap();
        let cond = crate::ddpm::encode_condition(&model.encoder, &samples[0].rrs, 10.0).unwrap();
        let mut rng = rng_for(1, "predict");
        let p = predict_point(&model, &cond, 1, &mut rng);
        assert!(p.std_degenerate);
        assert_eq!(p.std, [0.0; 3]);
        // reproducible under the same rng stream
        let mut rng2 = rng_for(1, "predict");
        let p2 = predict_point(&model, &cond, 1, &mut rng2);
        assert_eq!(p.mean, p2.mean);
    }

    #[test]
    fn constant_targets_collapse_sampler_variance() {
        // all targets identical: the reverse process should contract to the
        // single training point in standardized space
        let samples: Vec<TrainSample> = (0..60)
            .map(|i| {
                let f = i as f64 / 59.0;
                TrainSample {
                    rrs: vec![0.01 + 0.005 * f, 0.02, 0.015 - 0.003 * f, 0.01],
                    salinity_psu: 5.0 + f,
                    targets: [0.1, 12.0, 0.9],
                }
            })
            .collect();
        let cfg = TrainingConfig {
            steps: 30,
            beta_min: 1e-3,
            beta_max: 0.3,
            hidden: vec![24, 24],
            t_embed_dim: 4,
            pca_components: 1,
            batch_size: 16,
            learning_rate: 3e-3,
            max_epochs: 60,
            patience: 59,
            validation_fraction: 0.1,
            seed: 33,
        };
        let (model, _) = train(&samples, &cfg).unwrap();
        let cond = crate::ddpm::encode_condition(&model.encoder, &samples[0].rrs, 5.5).unwrap();
        let mut rng = rng_for(4, "collapse");
        let draws =
            sample_standardized(&model.denoiser, &model.schedule, &cond, 400, &mut rng);
        for d in 0..TARGET_DIM {
            let mean: f64 = draws.iter().map(|x| x[d]).sum::<f64>() / draws.len() as f64;
            let var: f64 =
                draws.iter().map(|x| (x[d] - mean).powi(2)).sum::<f64>() / draws.len() as f64;
            assert!(
                var < 0.15,
                "standardized variance {var} did not collapse (dim {d})"
            );
        }
    }
}
