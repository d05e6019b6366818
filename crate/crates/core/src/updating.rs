//! Inferential and predictive updating.
//!
//! Inferential updating multiplies the prior by a strictly positive score
//! and rescales: `p_E(H_i) = s_i p_i / sum_j s_j p_j`.
//!
//! Predictive updating adds the score to the prior, `q_i = p_i + s_i`, and
//! then shifts by a constant `d`, zeroing the entries that would go
//! non-positive. Among all such shifts the one with the smallest `d` zeroes
//! the fewest hypotheses, and it is computed here by sorting `q` and keeping
//! the longest prefix of large entries that stays positive after the shift.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::credal::ProbabilityVector;
use crate::error::{Error, Result};
use crate::evidence::{exp_loss_score, LossValue, ScoreMode, ScoreVector};
use crate::numeric::{compensated_sum, CompensatedSum};

/// Largest input accepted by [`brute_force_normalize_oracle`].
pub const ORACLE_MAX_LEN: usize = 12;

/// Output of the additive normalization step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizationResult {
    pub posterior: ProbabilityVector,
    /// The additive constant applied to every surviving entry.
    pub d: f64,
    /// Indices whose posterior is exactly zero.
    pub zeroed: BTreeSet<usize>,
    /// `zeroed.len()`.
    pub m: usize,
}

impl NormalizationResult {
    fn from_survivors(q: &[f64], survivors: &[usize], d: f64) -> Self {
        let n = q.len();
        let mut posterior = vec![0.0; n];
        for &i in survivors {
            posterior[i] = q[i] + d;
        }
        let alive: BTreeSet<usize> = survivors.iter().copied().collect();
        let zeroed: BTreeSet<usize> = (0..n).filter(|i| !alive.contains(i)).collect();
        let m = zeroed.len();
        Self {
            posterior: ProbabilityVector::from_raw(posterior),
            d,
            zeroed,
            m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UpdateRule {
    Inferential,
    Predictive,
    /// Exponentiated-loss updating with the given learning rate.
    GeneralBayes {
        learning_rate: f64,
    },
}

impl UpdateRule {
    pub fn validate(&self) -> Result<()> {
        if let UpdateRule::GeneralBayes { learning_rate } = *self {
            if !(learning_rate.is_finite() && learning_rate > 0.0) {
                return Err(Error::invalid(format!(
                    "learning rate {learning_rate} must be finite and > 0"
                )));
            }
        }
        Ok(())
    }

    /// Score mode this rule consumes.
    pub fn score_mode(&self) -> ScoreMode {
        match self {
            UpdateRule::Predictive => ScoreMode::Additive,
            UpdateRule::Inferential | UpdateRule::GeneralBayes { .. } => ScoreMode::Multiplicative,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            UpdateRule::Inferential => "inferential",
            UpdateRule::Predictive => "predictive",
            UpdateRule::GeneralBayes { .. } => "general_bayes",
        }
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::LengthMismatch { expected, found });
    }
    Ok(())
}

/// Rescales non-negative weights to sum to one.
fn normalize_weights(weights: Vec<f64>) -> Result<ProbabilityVector> {
    let total = compensated_sum(weights.iter().copied());
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::NumericUnderflow);
    }
    Ok(ProbabilityVector::from_raw(
        weights.into_iter().map(|w| w / total).collect(),
    ))
}

/// Multiplicative combination followed by multiplicative normalization.
pub fn inferential_update(p: &ProbabilityVector, s: &ScoreVector) -> Result<ProbabilityVector> {
    s.expect_mode(ScoreMode::Multiplicative)?;
    check_len(p.len(), s.len())?;
    let weights = p.iter().zip(s.scores()).map(|(pi, si)| si * pi).collect();
    normalize_weights(weights)
}

/// Step 1 of predictive updating: `q_i = p_i + s_i`.
pub fn combine_additive(p: &ProbabilityVector, s: &ScoreVector) -> Result<Vec<f64>> {
    s.expect_mode(ScoreMode::Additive)?;
    check_len(p.len(), s.len())?;
    let q: Vec<f64> = p.iter().zip(s.scores()).map(|(pi, si)| pi + si).collect();
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("combined scores overflowed"));
    }
    Ok(q)
}

fn check_raw(q: &[f64]) -> Result<()> {
    if q.is_empty() {
        return Err(Error::invalid("cannot normalize an empty vector"));
    }
    if let Some(i) = q.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("entry {i} is not finite")));
    }
    Ok(())
}

/// Step 2 of predictive updating: the minimal-`d` additive normalization.
///
/// Entries are visited in descending order (ties by index). The survivor set
/// is the longest prefix whose smallest member stays strictly positive after
/// the shift `d = (1 - prefix_sum) / prefix_len`. Entries landing exactly on
/// zero count as zeroed.
pub fn conservative_normalize(q: &[f64]) -> Result<NormalizationResult> {
    check_raw(q)?;
    let mut order: Vec<usize> = (0..q.len()).collect();
    order.sort_by(|&a, &b| q[b].total_cmp(&q[a]));

    let mut prefix = CompensatedSum::default();
    let mut best = None;
    for (k, &i) in order.iter().enumerate() {
        prefix.add(q[i]);
        let d = (1.0 - prefix.value()) / (k + 1) as f64;
        if q[i] + d > 0.0 {
            best = Some((k + 1, d));
        }
    }
    let (rho, d) = best.ok_or_else(|| Error::Internal("no feasible survivor set".into()))?;
    Ok(NormalizationResult::from_survivors(q, &order[..rho], d))
}

/// Enumeration oracle for [`conservative_normalize`].
///
/// Tries `m = 0, 1, ...` zeroed entries (the `m` smallest, higher index
/// first among ties) and returns the first `m` whose survivors all stay
/// strictly positive.
pub fn brute_force_normalize_oracle(q: &[f64]) -> Result<NormalizationResult> {
    check_raw(q)?;
    let n = q.len();
    if n > ORACLE_MAX_LEN {
        return Err(Error::invalid(format!(
            "oracle is limited to {ORACLE_MAX_LEN} entries, got {n}"
        )));
    }
    // ascending by value, higher index first on ties: that index is zeroed first
    let mut ascending: Vec<usize> = (0..n).collect();
    ascending.sort_by(|&a, &b| q[a].total_cmp(&q[b]).then(b.cmp(&a)));
    for m in 0..n {
        let survivors: Vec<usize> = ascending[m..].to_vec();
        let total = compensated_sum(survivors.iter().map(|&i| q[i]));
        let d = (1.0 - total) / (n - m) as f64;
        if survivors.iter().all(|&i| q[i] + d > 0.0) {
            return Ok(NormalizationResult::from_survivors(q, &survivors, d));
        }
    }
    Err(Error::Internal(
        "no feasible zero set; the largest entry alone always survives".into(),
    ))
}

/// Additive combination followed by conservative additive normalization.
pub fn predictive_update(p: &ProbabilityVector, s: &ScoreVector) -> Result<NormalizationResult> {
    conservative_normalize(&combine_additive(p, s)?)
}

/// `p_E(H_i) ∝ exp(-rate * L_i) p_i`.
pub fn general_bayes_update(
    p: &ProbabilityVector,
    losses: &[LossValue],
) -> Result<ProbabilityVector> {
    check_len(p.len(), losses.len())?;
    let rate = losses
        .first()
        .map(LossValue::learning_rate)
        .ok_or_else(|| Error::invalid("loss list must be non-empty"))?;
    if losses.iter().any(|l| l.learning_rate() != rate) {
        return Err(Error::invalid("all losses must share one learning rate"));
    }
    let weights = losses
        .iter()
        .zip(p.iter())
        .map(|(l, pi)| (-rate * l.value()).exp() * pi)
        .collect();
    normalize_weights(weights)
}

fn apply_rule(
    p: &ProbabilityVector,
    s: &ScoreVector,
    rule: UpdateRule,
) -> Result<ProbabilityVector> {
    match rule {
        UpdateRule::Inferential => inferential_update(p, s),
        UpdateRule::Predictive => predictive_update(p, s).map(|r| r.posterior),
        UpdateRule::GeneralBayes { learning_rate } => {
            // s_i = exp(-L_i) at unit rate, so exp(-rate * L_i) = s_i^rate
            let tempered = s.scores().iter().map(|si| si.powf(learning_rate)).collect();
            let tempered =
                ScoreVector::multiplicative(tempered).map_err(|_| Error::NumericUnderflow)?;
            inferential_update(p, &tempered)
        }
    }
}

/// Folds a stream of score vectors through `rule`, returning `p0, p1, ..., pT`.
///
/// Under `GeneralBayes { learning_rate }` each score is read as a unit-rate
/// exponentiated loss `exp(-L)` and re-tempered to `exp(-rate * L)`.
pub fn sequential_update(
    p0: &ProbabilityVector,
    stream: &[ScoreVector],
    rule: UpdateRule,
) -> Result<Vec<ProbabilityVector>> {
    rule.validate()?;
    let mut trajectory = Vec::with_capacity(stream.len() + 1);
    trajectory.push(p0.clone());
    for (step, s) in stream.iter().enumerate() {
        let current = trajectory.last().expect("non-empty trajectory");
        let next = s
            .expect_mode(rule.score_mode())
            .and_then(|_| apply_rule(current, s, rule))
            .map_err(|e| Error::at_step(step, e))?;
        trajectory.push(next);
    }
    Ok(trajectory)
}

/// `inferential_update(p, exp_loss_score(losses))`.
pub fn inferential_from_losses(
    p: &ProbabilityVector,
    losses: &[LossValue],
) -> Result<ProbabilityVector> {
    inferential_update(p, &exp_loss_score(losses)?)
}
