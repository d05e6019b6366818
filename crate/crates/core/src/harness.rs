//! Seeded simulation comparing the updating rules on a forecasting task.
//!
//! A fixed set of models each issue the same predictive distribution at
//! every step. Data come from a "truth" distribution. Each rule starts from
//! the uniform prior and updates once per observation; after every step the
//! harness records the posterior, each model's CRPS on the new observation,
//! and the CRPS of the posterior-weighted mixture that was in force *before*
//! the observation arrived (the one-step-ahead predictive score).
//!
//! Randomness is keyed by counters: the data stream of replication `r` is
//! seeded from `(seed, r)` and shared by every rule, and Monte Carlo mixture
//! scoring at step `t` is seeded from `(seed, rule, r, t)`.

use std::collections::HashSet;
use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::credal::{is_probabilistic, uniform, ProbabilityVector, DEFAULT_EPS};
use crate::error::{Error, Result};
use crate::evidence::{crps, mixture_crps, Forecast, LossValue, ScoreVector};
use crate::numeric::{derive_key, fmt_g17};
use crate::updating::{general_bayes_update, inferential_update, predictive_update, UpdateRule};

const DATA_STREAM: u64 = 0xD47A;
const MIXTURE_STREAM: u64 = 0x313C;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub label: String,
    pub forecast: Forecast,
}

fn default_a() -> f64 {
    -1.0
}

fn default_floor() -> f64 {
    1e-300
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub truth: Forecast,
    pub models: Vec<ModelSpec>,
    pub horizon: usize,
    pub rules: Vec<UpdateRule>,
    /// CRPS scale for predictive updating; must be negative.
    #[serde(default = "default_a")]
    pub a: f64,
    /// Lower bound on Gaussian densities used as inferential scores.
    #[serde(default = "default_floor")]
    pub likelihood_floor: f64,
    pub replications: usize,
    /// Monte Carlo draws for the mixture score; exact when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_samples: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Collects every problem rather than stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if let Err(e) = self.truth.validate() {
            problems.push(format!("truth: {e}"));
        }
        if self.models.is_empty() {
            problems.push("models: need at least one model".to_string());
        }
        let mut labels = HashSet::new();
        for (i, m) in self.models.iter().enumerate() {
            if m.label.is_empty() {
                problems.push(format!("models[{i}].label: must be non-empty"));
            } else if !labels.insert(m.label.as_str()) {
                problems.push(format!("models[{i}].label: duplicate {:?}", m.label));
            }
            if let Err(e) = m.forecast.validate() {
                problems.push(format!("models[{i}].forecast: {e}"));
            }
        }
        if self.horizon == 0 {
            problems.push("horizon: must be >= 1".to_string());
        }
        if self.replications == 0 {
            problems.push("replications: must be >= 1".to_string());
        }
        if self.rules.is_empty() {
            problems.push("rules: need at least one rule".to_string());
        }
        let mut seen = HashSet::new();
        for (i, rule) in self.rules.iter().enumerate() {
            if let Err(e) = rule.validate() {
                problems.push(format!("rules[{i}]: {e}"));
            }
            if !seen.insert(rule_label(rule)) {
                problems.push(format!("rules[{i}]: duplicate rule"));
            }
            if *rule == UpdateRule::Inferential
                && self
                    .models
                    .iter()
                    .any(|m| !matches!(m.forecast, Forecast::Gaussian { .. }))
            {
                problems.push(format!(
                    "rules[{i}]: inferential updating scores by density and needs Gaussian models"
                ));
            }
        }
        if !(self.a.is_finite() && self.a < 0.0) {
            problems.push(format!("a: {} must be finite and < 0", self.a));
        }
        if !(self.likelihood_floor.is_finite() && self.likelihood_floor > 0.0) {
            problems.push(format!(
                "likelihood_floor: {} must be finite and > 0",
                self.likelihood_floor
            ));
        }
        if self.mc_samples == Some(0) {
            problems.push("mc_samples: must be >= 1 when given".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    fn forecasts(&self) -> Vec<Forecast> {
        self.models.iter().map(|m| m.forecast.clone()).collect()
    }
}

/// Name used for a rule in output files.
pub fn rule_label(rule: &UpdateRule) -> String {
    match rule {
        UpdateRule::GeneralBayes { learning_rate } => {
            format!("general_bayes:rate={}", fmt_g17(*learning_rate))
        }
        other => other.name().to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub t: usize,
    pub observation: f64,
    pub posterior: Vec<f64>,
    pub crps: Vec<f64>,
    pub mixture_crps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunTrace {
    pub rule: String,
    pub replication: usize,
    pub steps: Vec<StepRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleSummary {
    pub rule: String,
    /// Mean over replications of the time-averaged mixture CRPS.
    pub mean_mixture_crps: f64,
    /// Standard error of that mean; absent with a single replication.
    pub se_mixture_crps: Option<f64>,
    pub final_posterior_mean: Vec<f64>,
    pub final_posterior_se: Option<Vec<f64>>,
    /// Fraction of replications ending with each model at exactly zero.
    pub final_zero_fraction: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub models: Vec<String>,
    pub runs: Vec<RunTrace>,
    pub summaries: Vec<RuleSummary>,
}

impl ExperimentResult {
    pub fn runs_for<'a>(&'a self, rule: &'a str) -> impl Iterator<Item = &'a RunTrace> + 'a {
        self.runs.iter().filter(move |r| r.rule == rule)
    }

    /// `rule,replication,t,model,posterior,crps,mixture_crps`, one row per
    /// model, ordered by rule, replication, step and model index.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record([
            "rule",
            "replication",
            "t",
            "model",
            "posterior",
            "crps",
            "mixture_crps",
        ])?;
        for run in &self.runs {
            for step in &run.steps {
                for (i, label) in self.models.iter().enumerate() {
                    wtr.write_record([
                        run.rule.as_str(),
                        &run.replication.to_string(),
                        &step.t.to_string(),
                        label,
                        &fmt_g17(step.posterior[i]),
                        &fmt_g17(step.crps[i]),
                        &fmt_g17(step.mixture_crps),
                    ])?;
                }
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// `horizon` i.i.d. draws from `truth`, deterministic in `seed`.
pub fn generate_data(seed: u64, truth: &Forecast, horizon: usize) -> Result<Vec<f64>> {
    truth.validate()?;
    if horizon == 0 {
        return Err(Error::invalid("horizon must be >= 1"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    Ok((0..horizon).map(|_| truth.sample(&mut rng)).collect())
}

/// Monte Carlo CRPS of the posterior-weighted mixture at `x`.
///
/// Each draw picks model `i` with probability `posterior[i]` and samples its
/// forecast; the draws are scored with the empirical CRPS estimator.
pub fn weighted_predictive_score(
    posterior: &ProbabilityVector,
    models: &[ModelSpec],
    x: f64,
    mc_samples: usize,
    seed: u64,
) -> Result<f64> {
    if posterior.len() != models.len() {
        return Err(Error::LengthMismatch {
            expected: models.len(),
            found: posterior.len(),
        });
    }
    if mc_samples == 0 {
        return Err(Error::invalid("mc_samples must be >= 1"));
    }
    for m in models {
        m.forecast.validate()?;
    }
    let picker = WeightedIndex::new(posterior.values())
        .map_err(|e| Error::invalid(format!("posterior weights: {e}")))?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let samples: Vec<f64> = (0..mc_samples)
        .map(|_| models[picker.sample(&mut rng)].forecast.sample(&mut rng))
        .collect();
    crps(&Forecast::Empirical { samples }, x)
}

fn step_posterior(
    cfg: &ExperimentConfig,
    rule: &UpdateRule,
    prior: &ProbabilityVector,
    x: f64,
    model_crps: &[f64],
) -> Result<ProbabilityVector> {
    match *rule {
        UpdateRule::Inferential => {
            let dens = cfg
                .models
                .iter()
                .map(|m| {
                    m.forecast
                        .density(x)
                        .map(|d| d.max(cfg.likelihood_floor))
                        .ok_or_else(|| Error::invalid("inferential scoring needs a density"))
                })
                .collect::<Result<Vec<_>>>()?;
            inferential_update(prior, &ScoreVector::multiplicative(dens)?)
        }
        UpdateRule::Predictive => {
            let scores = model_crps.iter().map(|c| cfg.a * c).collect();
            predictive_update(prior, &ScoreVector::additive(scores)?).map(|r| r.posterior)
        }
        UpdateRule::GeneralBayes { learning_rate } => {
            general_bayes_update(prior, &LossValue::batch(model_crps, learning_rate)?)
        }
    }
}

fn run_single(
    cfg: &ExperimentConfig,
    rule_index: usize,
    replication: usize,
    data: &[f64],
) -> Result<RunTrace> {
    let rule = &cfg.rules[rule_index];
    let forecasts = cfg.forecasts();
    let mut posterior = uniform(cfg.models.len())?;
    let mut steps = Vec::with_capacity(data.len());
    for (k, &x) in data.iter().enumerate() {
        let t = k + 1;
        let model_crps = forecasts
            .iter()
            .map(|f| crps(f, x))
            .collect::<Result<Vec<_>>>()?;
        let mixture = match cfg.mc_samples {
            Some(draws) => {
                let key = derive_key(
                    cfg.seed,
                    &[
                        MIXTURE_STREAM,
                        rule_index as u64,
                        replication as u64,
                        t as u64,
                    ],
                );
                weighted_predictive_score(&posterior, &cfg.models, x, draws, key)?
            }
            None => mixture_crps(posterior.values(), &forecasts, x)?,
        };
        posterior = step_posterior(cfg, rule, &posterior, x, &model_crps)
            .map_err(|e| Error::at_step(t, e))?;
        debug_assert!(is_probabilistic(&posterior, DEFAULT_EPS).unwrap_or(false));
        steps.push(StepRecord {
            t,
            observation: x,
            posterior: posterior.values().to_vec(),
            crps: model_crps,
            mixture_crps: mixture,
        });
    }
    Ok(RunTrace {
        rule: rule_label(rule),
        replication,
        steps,
    })
}

fn mean_and_se(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Some((var / n).sqrt()))
}

fn summarize(label: String, runs: &[&RunTrace], n_models: usize) -> RuleSummary {
    let avg_scores: Vec<f64> = runs
        .iter()
        .map(|r| r.steps.iter().map(|s| s.mixture_crps).sum::<f64>() / r.steps.len() as f64)
        .collect();
    let (mean_mixture_crps, se_mixture_crps) = mean_and_se(&avg_scores);

    let mut final_posterior_mean = Vec::with_capacity(n_models);
    let mut final_se = Vec::with_capacity(n_models);
    let mut final_zero_fraction = Vec::with_capacity(n_models);
    for i in 0..n_models {
        let finals: Vec<f64> = runs
            .iter()
            .map(|r| r.steps.last().expect("horizon >= 1").posterior[i])
            .collect();
        let (m, se) = mean_and_se(&finals);
        final_posterior_mean.push(m);
        final_se.push(se);
        final_zero_fraction
            .push(finals.iter().filter(|&&v| v == 0.0).count() as f64 / finals.len() as f64);
    }
    RuleSummary {
        rule: label,
        mean_mixture_crps,
        se_mixture_crps,
        final_posterior_mean,
        final_posterior_se: final_se.into_iter().collect(),
        final_zero_fraction,
    }
}

/// Runs every rule on every replication. Output is a deterministic function
/// of `cfg`; replications run in parallel and are reassembled in order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let data: Vec<Vec<f64>> = (0..cfg.replications)
        .map(|r| {
            generate_data(
                derive_key(cfg.seed, &[DATA_STREAM, r as u64]),
                &cfg.truth,
                cfg.horizon,
            )
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> = (0..cfg.rules.len())
        .flat_map(|rule| (0..cfg.replications).map(move |rep| (rule, rep)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(rule, rep)| run_single(cfg, rule, rep, &data[rep]))
        .collect::<Result<Vec<_>>>()?;

    let summaries = cfg
        .rules
        .iter()
        .map(|rule| {
            let label = rule_label(rule);
            let mine: Vec<&RunTrace> = runs.iter().filter(|r| r.rule == label).collect();
            summarize(label, &mine, cfg.models.len())
        })
        .collect();

    Ok(ExperimentResult {
        models: cfg.models.iter().map(|m| m.label.clone()).collect(),
        runs,
        summaries,
    })
}
