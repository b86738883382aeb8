//! Least-squares spectral analysis for irregularly sampled series.
//!
//! At each trial period the series is fit with `a cos(wt) + b sin(wt) + c`
//! (floating mean), and the power is the fraction of variance the fit
//! explains. Works on gappy records where an FFT would not.

use super::EvalError;
use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

const MIN_POINTS: usize = 50;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PeriodogramConfig {
    pub min_period_hours: f64,
    pub max_period_hours: f64,
    /// Number of log-spaced trial periods.
    pub n_periods: usize,
    /// Family-wise false-alarm probability defining the significance level.
    pub false_alarm_probability: f64,
}

impl Default for PeriodogramConfig {
    fn default() -> Self {
        Self {
            min_period_hours: 2.0,
            max_period_hours: 200.0,
            n_periods: 4000,
            false_alarm_probability: 0.01,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodogramResult {
    pub periods_hours: Vec<f64>,
    /// Explained-variance fraction in [0, 1] per trial period.
    pub power: Vec<f64>,
    pub dominant_period_hours: f64,
    pub dominant_power: f64,
    /// Power threshold at the configured family-wise false-alarm probability.
    pub significance_power: f64,
    pub n_points: usize,
}

impl PeriodogramResult {
    /// Local maxima above the significance level, as (period, power),
    /// strongest first.
    pub fn significant_peaks(&self) -> Vec<(f64, f64)> {
        let mut peaks = Vec::new();
        for i in 1..self.power.len().saturating_sub(1) {
            if self.power[i] > self.power[i - 1]
                && self.power[i] >= self.power[i + 1]
                && self.power[i] > self.significance_power
            {
                peaks.push((self.periods_hours[i], self.power[i]));
            }
        }
        peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
        peaks
    }
}

/// Least-squares periodogram over a log-spaced period grid. The dominant
/// period is refined by parabolic interpolation around the strongest node.
pub fn periodogram(
    series: &[(DateTime<Utc>, f64)],
    config: &PeriodogramConfig,
) -> Result<PeriodogramResult, EvalError> {
    if series.len() < MIN_POINTS {
        return Err(EvalError::TooFewPoints {
            need: MIN_POINTS,
            got: series.len(),
        });
    }
    assert!(
        config.min_period_hours > 0.0 && config.max_period_hours > config.min_period_hours,
        "invalid period range"
    );
    assert!(config.n_periods >= 2, "need at least two trial periods");

    let t0 = series[0].0;
    let hours: Vec<f64> = series
        .iter()
        .map(|(t, _)| (*t - t0).num_seconds() as f64 / 3600.0)
        .collect();
    let values: Vec<f64> = series.iter().map(|(_, v)| v).copied().collect();
    let n = values.len() as f64;

    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;

    let log_min = config.min_period_hours.ln();
    let log_max = config.max_period_hours.ln();
    let periods: Vec<f64> = (0..config.n_periods)
        .map(|i| (log_min + (log_max - log_min) * i as f64 / (config.n_periods - 1) as f64).exp())
        .collect();

    let power: Vec<f64> = periods
        .par_iter()
        .map(|&period| {
            if variance <= 0.0 {
                return 0.0;
            }
            explained_fraction(&hours, &values, mean, variance, TAU / period)
        })
        .collect();

    let mut dominant_idx = 0;
    for (i, &p) in power.iter().enumerate() {
        if p > power[dominant_idx] {
            dominant_idx = i;
        }
    }
    let dominant_period_hours = refine_log_parabolic(&periods, &power, dominant_idx);

    // Family-wise false-alarm level: the single-trial exceedance probability
    // of the explained fraction under Gaussian noise is (1 - z)^((N-3)/2);
    // the number of effectively independent trials is the Rayleigh count of
    // the scanned frequency span.
    let span_hours = hours.last().unwrap() - hours[0];
    let independent = ((1.0 / config.min_period_hours - 1.0 / config.max_period_hours)
        * span_hours)
        .ceil()
        .max(1.0);
    let single_trial = 1.0 - (1.0 - config.false_alarm_probability).powf(1.0 / independent);
    let exponent = ((n - 3.0) / 2.0).max(1.0);
    let significance_power = 1.0 - single_trial.powf(1.0 / exponent);

    Ok(PeriodogramResult {
        periods_hours: periods,
        dominant_period_hours,
        dominant_power: power[dominant_idx],
        significance_power,
        n_points: values.len(),
        power,
    })
}

/// Fraction of variance explained by the floating-mean sinusoid at `omega`.
fn explained_fraction(hours: &[f64], values: &[f64], mean: f64, variance: f64, omega: f64) -> f64 {
    let n = hours.len() as f64;
    let (mut c, mut s) = (0.0, 0.0);
    let (mut cc, mut ss, mut cs) = (0.0, 0.0, 0.0);
    let (mut yc, mut ys) = (0.0, 0.0);
    for (&t, &v) in hours.iter().zip(values) {
        let (sin, cos) = (omega * t).sin_cos();
        let y = v - mean;
        c += cos;
        s += sin;
        cc += cos * cos;
        ss += sin * sin;
        cs += cos * sin;
        yc += y * cos;
        ys += y * sin;
    }
    c /= n;
    s /= n;
    cc = cc / n - c * c;
    ss = ss / n - s * s;
    cs = cs / n - c * s;
    yc /= n;
    ys /= n;
    let det = cc * ss - cs * cs;
    if det.abs() < 1e-300 {
        return 0.0;
    }
    let explained = (ss * yc * yc + cc * ys * ys - 2.0 * cs * yc * ys) / det;
    (explained / variance).clamp(0.0, 1.0)
}

/// Parabolic vertex through the peak node and its neighbours, in log-period.
fn refine_log_parabolic(periods: &[f64], power: &[f64], idx: usize) -> f64 {
    if idx == 0 || idx + 1 >= periods.len() {
        return periods[idx];
    }
    let (y0, y1, y2) = (power[idx - 1], power[idx], power[idx + 1]);
    let denom = y0 - 2.0 * y1 + y2;
    if denom.abs() < 1e-300 {
        return periods[idx];
    }
    let shift = 0.5 * (y0 - y2) / denom;
    let log_step = (periods[idx + 1] / periods[idx]).ln();
    (periods[idx].ln() + shift.clamp(-1.0, 1.0) * log_step).exp()
}
