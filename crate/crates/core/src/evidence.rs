//! Evidential measures `Ev[E|H]`.
//!
//! A measure turns a piece of evidence into one score per hypothesis. Scores
//! meant for multiplicative combination must be strictly positive; scores
//! meant for additive combination may take any finite value. Conditional
//! scores are the caller's business: supply a fresh [`ScoreVector`] for each
//! evidence item, computed against whatever history the measure needs.

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// How a score vector is meant to be combined with a prior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreMode {
    Multiplicative,
    Additive,
}

/// One evidential score per hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreVector {
    scores: Vec<f64>,
    mode: ScoreMode,
}

impl ScoreVector {
    pub fn new(scores: Vec<f64>, mode: ScoreMode) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::invalid("score vector must be non-empty"));
        }
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::invalid(format!("score {i} is not finite")));
        }
        if mode == ScoreMode::Multiplicative {
            if let Some(i) = scores.iter().position(|&s| s <= 0.0) {
                return Err(Error::invalid(format!(
                    "multiplicative score {i} = {} must be strictly positive",
                    scores[i]
                )));
            }
        }
        Ok(Self { scores, mode })
    }

    pub fn multiplicative(scores: Vec<f64>) -> Result<Self> {
        Self::new(scores, ScoreMode::Multiplicative)
    }

    pub fn additive(scores: Vec<f64>) -> Result<Self> {
        Self::new(scores, ScoreMode::Additive)
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn mode(&self) -> ScoreMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub(crate) fn expect_mode(&self, expected: ScoreMode) -> Result<()> {
        if self.mode != expected {
            return Err(Error::ModeMismatch {
                expected,
                found: self.mode,
            });
        }
        Ok(())
    }
}

/// A predictive distribution over a real-valued outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Forecast {
    PointMass {
        #[serde(rename = "loc")]
        location: f64,
    },
    Gaussian {
        mu: f64,
        sigma: f64,
    },
    Empirical {
        samples: Vec<f64>,
    },
}

impl Forecast {
    pub fn validate(&self) -> Result<()> {
        match self {
            Forecast::PointMass { location } => {
                if !location.is_finite() {
                    return Err(Error::invalid("point mass location must be finite"));
                }
            }
            Forecast::Gaussian { mu, sigma } => {
                if !mu.is_finite() {
                    return Err(Error::invalid("gaussian mu must be finite"));
                }
                if !(sigma.is_finite() && *sigma > 0.0) {
                    return Err(Error::invalid("gaussian sigma must be finite and > 0"));
                }
            }
            Forecast::Empirical { samples } => {
                if samples.is_empty() {
                    return Err(Error::invalid(
                        "empirical forecast needs at least one sample",
                    ));
                }
                if samples.iter().any(|s| !s.is_finite()) {
                    return Err(Error::invalid("empirical samples must be finite"));
                }
            }
        }
        Ok(())
    }

    /// One draw from the distribution.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Forecast::PointMass { location } => *location,
            Forecast::Gaussian { mu, sigma } => Normal::new(*mu, *sigma)
                .expect("validated sigma")
                .sample(rng),
            Forecast::Empirical { samples } => samples[rng.random_range(0..samples.len())],
        }
    }

    /// Density at `x`; only the Gaussian variant has one.
    pub fn density(&self, x: f64) -> Option<f64> {
        match self {
            Forecast::Gaussian { mu, sigma } => {
                let z = (x - mu) / sigma;
                Some(std_normal_pdf(z) / sigma)
            }
            _ => None,
        }
    }
}

/// A non-negative loss together with its learning rate (the exponent scale
/// in `exp(-rate * loss)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossValue {
    value: f64,
    learning_rate: f64,
}

impl LossValue {
    pub fn new(value: f64, learning_rate: f64) -> Result<Self> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::invalid(format!(
                "loss {value} must be finite and >= 0"
            )));
        }
        if !(learning_rate.is_finite() && learning_rate > 0.0) {
            return Err(Error::invalid(format!(
                "learning rate {learning_rate} must be finite and > 0"
            )));
        }
        Ok(Self {
            value,
            learning_rate,
        })
    }

    /// A batch of losses sharing one learning rate.
    pub fn batch(values: &[f64], learning_rate: f64) -> Result<Vec<Self>> {
        values
            .iter()
            .map(|&v| Self::new(v, learning_rate))
            .collect()
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }
}

pub(crate) fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

pub(crate) fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// `E|Y|` for `Y ~ N(mean, sd^2)`; `sd = 0` degenerates to `|mean|`.
fn folded_normal_mean(mean: f64, sd: f64) -> f64 {
    if sd == 0.0 {
        return mean.abs();
    }
    let z = mean / sd;
    sd * 2.0 * std_normal_pdf(z) + mean * (2.0 * std_normal_cdf(z) - 1.0)
}

/// Sum over all pairs `|a_i - b_j|`, with `b` sorted ascending.
fn pairwise_abs_sum_sorted(a: &[f64], b_sorted: &[f64]) -> f64 {
    let mut prefix = Vec::with_capacity(b_sorted.len() + 1);
    prefix.push(0.0);
    for &v in b_sorted {
        prefix.push(prefix.last().unwrap() + v);
    }
    let total = prefix[b_sorted.len()];
    let m = b_sorted.len() as f64;
    a.iter()
        .map(|&x| {
            let k = b_sorted.partition_point(|&v| v < x);
            let below = prefix[k];
            let kf = k as f64;
            (kf * x - below) + ((total - below) - (m - kf) * x)
        })
        .sum()
}

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// `E|X - Y|` for independent `X ~ a`, `Y ~ b`. With `a == b` this is the
/// mean absolute difference of two independent copies.
pub fn expected_abs_difference(a: &Forecast, b: &Forecast) -> f64 {
    use Forecast::*;
    match (a, b) {
        (PointMass { location: x }, PointMass { location: y }) => (x - y).abs(),
        (PointMass { location: x }, Gaussian { mu, sigma })
        | (Gaussian { mu, sigma }, PointMass { location: x }) => folded_normal_mean(mu - x, *sigma),
        (Gaussian { mu: m1, sigma: s1 }, Gaussian { mu: m2, sigma: s2 }) => {
            folded_normal_mean(m1 - m2, s1.hypot(*s2))
        }
        (Empirical { samples: sa }, Empirical { samples: sb }) => {
            pairwise_abs_sum_sorted(sa, &sorted(sb)) / (sa.len() as f64 * sb.len() as f64)
        }
        (Empirical { samples }, other) | (other, Empirical { samples }) => {
            samples
                .iter()
                .map(|&s| expected_abs_difference(&PointMass { location: s }, other))
                .sum::<f64>()
                / samples.len() as f64
        }
    }
}

fn check_finite(x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::invalid("observation must be finite"));
    }
    Ok(())
}

/// Continuous ranked probability score `E|X - x| - E|X1 - X2| / 2`.
///
/// Point masses and Gaussians use closed forms; empirical forecasts use the
/// plug-in estimator over the samples, evaluated after sorting.
pub fn crps(forecast: &Forecast, x: f64) -> Result<f64> {
    forecast.validate()?;
    check_finite(x)?;
    let value = match forecast {
        Forecast::PointMass { location } => (location - x).abs(),
        Forecast::Gaussian { mu, sigma } => {
            let z = (x - mu) / sigma;
            sigma
                * (z * (2.0 * std_normal_cdf(z) - 1.0) + 2.0 * std_normal_pdf(z) - 1.0 / PI.sqrt())
        }
        Forecast::Empirical { samples } => empirical_crps(&sorted(samples), x),
    };
    Ok(value.max(0.0))
}

fn empirical_crps(sorted_samples: &[f64], x: f64) -> f64 {
    let m = sorted_samples.len() as f64;
    let spread_to_obs = sorted_samples.iter().map(|s| (s - x).abs()).sum::<f64>() / m;
    // sum_{i,j} |s_i - s_j| = 2 * sum_k (2k - m + 1) s_(k), k zero-based
    let pair_sum: f64 = sorted_samples
        .iter()
        .enumerate()
        .map(|(k, &s)| (2.0 * k as f64 - m + 1.0) * s)
        .sum::<f64>()
        * 2.0;
    spread_to_obs - pair_sum / (2.0 * m * m)
}

/// Exact CRPS of the mixture `sum_i w_i * forecasts[i]` at `x`.
///
/// Components with zero weight are skipped.
pub fn mixture_crps(weights: &[f64], forecasts: &[Forecast], x: f64) -> Result<f64> {
    if weights.len() != forecasts.len() {
        return Err(Error::LengthMismatch {
            expected: forecasts.len(),
            found: weights.len(),
        });
    }
    check_finite(x)?;
    for f in forecasts {
        f.validate()?;
    }
    let active: Vec<(f64, &Forecast)> = weights
        .iter()
        .copied()
        .zip(forecasts)
        .filter(|(w, _)| *w > 0.0)
        .collect();
    if active.is_empty() {
        return Err(Error::invalid("mixture needs at least one positive weight"));
    }
    let obs = Forecast::PointMass { location: x };
    let mut to_obs = 0.0;
    let mut spread = 0.0;
    for (i, &(wi, fi)) in active.iter().enumerate() {
        to_obs += wi * expected_abs_difference(fi, &obs);
        spread += wi * wi * expected_abs_difference(fi, fi);
        for &(wj, fj) in &active[i + 1..] {
            spread += 2.0 * wi * wj * expected_abs_difference(fi, fj);
        }
    }
    Ok((to_obs - 0.5 * spread).max(0.0))
}

fn require_negative_scale(a: f64) -> Result<()> {
    if !(a.is_finite() && a < 0.0) {
        return Err(Error::invalid(format!(
            "scaling constant a = {a} must be finite and < 0"
        )));
    }
    Ok(())
}

/// Additive scores `a * CRPS(f_i, x)`; `a` must be negative so that better
/// forecasts gain credibility.
pub fn crps_measure(forecasts: &[Forecast], x: f64, a: f64) -> Result<ScoreVector> {
    require_negative_scale(a)?;
    let scores = forecasts
        .iter()
        .map(|f| crps(f, x).map(|c| a * c))
        .collect::<Result<Vec<_>>>()?;
    ScoreVector::additive(scores)
}

/// Multiplicative scores `exp(-rate * L_i)`.
pub fn exp_loss_score(losses: &[LossValue]) -> Result<ScoreVector> {
    let first = losses
        .first()
        .ok_or_else(|| Error::invalid("loss list must be non-empty"))?;
    let rate = first.learning_rate();
    if losses.iter().any(|l| l.learning_rate() != rate) {
        return Err(Error::invalid("all losses must share one learning rate"));
    }
    let scores = losses.iter().map(|l| (-rate * l.value()).exp()).collect();
    ScoreVector::multiplicative(scores).map_err(|_| Error::NumericUnderflow)
}

/// Additive scores `a * min_j |y_j - f_i(x_j)|`.
///
/// `predictions[i][j]` is hypothesis `i`'s prediction at `data[j].0`.
pub fn min_abs_error_score(
    data: &[(f64, f64)],
    predictions: &[Vec<f64>],
    a: f64,
) -> Result<ScoreVector> {
    if data.is_empty() {
        return Err(Error::invalid("data must be non-empty"));
    }
    require_negative_scale(a)?;
    if data.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::invalid("data points must be finite"));
    }
    let mut scores = Vec::with_capacity(predictions.len());
    for (i, preds) in predictions.iter().enumerate() {
        if preds.len() != data.len() {
            return Err(Error::invalid(format!(
                "hypothesis {i} has {} predictions for {} data points",
                preds.len(),
                data.len()
            )));
        }
        let min_err = data
            .iter()
            .zip(preds)
            .map(|(&(_, y), &fy)| (y - fy).abs())
            .fold(f64::INFINITY, f64::min);
        scores.push(a * min_err);
    }
    ScoreVector::additive(scores)
}

/// Wraps strictly positive likelihoods `p(E|H_i)` as multiplicative scores.
pub fn likelihood_score(likelihoods: &[f64]) -> Result<ScoreVector> {
    ScoreVector::multiplicative(likelihoods.to_vec())
}
